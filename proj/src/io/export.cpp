#include "export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "log.hpp"

namespace atls {

using ojson = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  return in;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

[[noreturn]] void bad_file(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::IoError, "'" + path + "': " + why);
}

double parse_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') bad_file(path, "expected a number, got '" + s + "'");
  return x;
}

long parse_long(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const long x = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') bad_file(path, "expected an integer, got '" + s + "'");
  return x;
}

std::string grid_header(const Domain& d) {
  std::ostringstream s;
  s << d.nx() << " " << d.ny() << " " << d.nz() << " h " << format_double(d.h()) << " origin "
    << format_double(d.origin()[0]) << " " << format_double(d.origin()[1]) << " " << format_double(d.origin()[2]);
  return s.str();
}

void check_dims(const Domain& d, const std::array<int, 3>& dims, const std::string& path) {
  if (dims[0] != d.nx() || dims[1] != d.ny() || dims[2] != d.nz()) {
    std::ostringstream msg;
    msg << "grid " << dims[0] << "x" << dims[1] << "x" << dims[2] << " does not match the configured domain " << d.nx()
        << "x" << d.ny() << "x" << d.nz();
    bad_file(path, msg.str());
  }
}

}  // namespace

FieldSet snapshot_fields(const Problem& problem, const Evaluation& ev, const CombinedLevelSet& level_set) {
  const auto& domain = problem.domain;
  const std::size_t n = domain.element_count();
  ScalarField occupancy(n, 0.0);
  for (std::size_t e = 0; e < n; ++e)
    if (domain.in_design(int(e))) occupancy[e] = ev.topology.occupancy(int(e));

  auto first_of = [&](ConstraintKind kind) -> ScalarField {
    for (std::size_t i = 0; i < problem.constraints.size(); ++i)
      if (problem.constraints[i].kind == kind && i < ev.constraints.size()) return ev.constraints[i].field;
    return ScalarField(n, 0.0);
  };
  ScalarField compliance = first_of(ConstraintKind::Compliance);
  if (std::none_of(problem.constraints.begin(), problem.constraints.end(),
                   [](const ConstraintSpec& c) { return c.kind == ConstraintKind::Compliance; }) &&
      !ev.cases.empty())
    compliance = ev.cases.front().compliance_field;

  FieldSet out;
  out.emplace_back("occupancy", std::move(occupancy));
  out.emplace_back("von_mises", ev.von_mises.empty() ? ScalarField(n, 0.0) : ev.von_mises);
  out.emplace_back("T_compliance", std::move(compliance));
  out.emplace_back("T_stress", first_of(ConstraintKind::PNormStress));
  out.emplace_back("T_eigen", first_of(ConstraintKind::Eigenvalue));
  out.emplace_back("T_buckling", first_of(ConstraintKind::Buckling));
  out.emplace_back("T_combined", level_set.values.empty() ? ScalarField(n, 0.0) : level_set.values);
  return out;
}

// ---------------------------------------------------------------------------
// VTK

void export_vtk(const Domain& domain, const Topology& topology, const FieldSet& fields, const std::string& path,
                bool full_domain) {
  const std::size_t n = domain.element_count();
  if (topology.solid_flags().size() != n) throw Error(ErrorCode::DimensionMismatch, "topology does not match domain");
  for (const auto& [name, values] : fields)
    if (values.size() != n) throw Error(ErrorCode::DimensionMismatch, "field '" + name + "' does not match domain");

  std::vector<int> cells;
  for (std::size_t e = 0; e < n; ++e)
    if (full_domain || topology.solid(int(e))) cells.push_back(int(e));
  if (cells.empty()) log_warning("'" + path + "': topology has no solid elements; writing a grid with zero cells");

  std::vector<int> point_of(domain.node_count(), -1);
  for (int e : cells)
    for (int v : domain.element_nodes(e)) point_of[std::size_t(v)] = 0;
  std::vector<int> points;
  for (std::size_t v = 0; v < point_of.size(); ++v)
    if (point_of[v] == 0) {
      point_of[v] = int(points.size());
      points.push_back(int(v));
    }

  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "atls grid " << grid_header(domain) << " cells " << (full_domain ? "full" : "solid") << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << points.size() << " double\n";
  for (int v : points) {
    const auto p = domain.node_position(v);
    out << format_double(p[0]) << " " << format_double(p[1]) << " " << format_double(p[2]) << "\n";
  }
  out << "CELLS " << cells.size() << " " << cells.size() * 9 << "\n";
  for (int e : cells) {
    out << 8;
    for (int v : domain.element_nodes(e)) out << " " << point_of[std::size_t(v)];
    out << "\n";
  }
  out << "CELL_TYPES " << cells.size() << "\n";
  for (std::size_t i = 0; i < cells.size(); ++i) out << "12\n";
  out << "CELL_DATA " << cells.size() << "\n";
  out << "SCALARS element_id int 1\nLOOKUP_TABLE default\n";
  for (int e : cells) out << e << "\n";
  for (const auto& [name, values] : fields) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int e : cells) out << format_double(values[std::size_t(e)]) << "\n";
  }
  close_out(out, path);
}

VtkGrid read_vtk(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  VtkGrid g;
  std::getline(in, line);
  if (line.rfind("# vtk DataFile", 0) != 0) bad_file(path, "not a legacy VTK file");
  std::getline(in, line);
  {
    std::istringstream s(line);
    std::string tag, grid, htag, otag, ctag, extent;
    s >> tag >> grid >> g.dims[0] >> g.dims[1] >> g.dims[2] >> htag >> g.h >> otag >> g.origin[0] >> g.origin[1] >>
        g.origin[2] >> ctag >> extent;
    if (!s || tag != "atls" || grid != "grid" || htag != "h" || otag != "origin" || ctag != "cells" ||
        (extent != "solid" && extent != "full"))
      bad_file(path, "missing atls grid header on line 2");
    g.full_domain = extent == "full";
  }
  std::getline(in, line);
  if (line.rfind("ASCII", 0) != 0) bad_file(path, "only ASCII files are supported");

  std::string word;
  auto next = [&]() {
    if (!(in >> word)) bad_file(path, "unexpected end of file");
    return word;
  };
  auto count = [&]() { return std::size_t(parse_long(next(), path)); };

  std::size_t ncell_data = 0;
  while (in >> word) {
    if (word == "DATASET") {
      if (next() != "UNSTRUCTURED_GRID") bad_file(path, "expected an unstructured grid");
    } else if (word == "POINTS") {
      g.points.resize(count());
      next();
      for (auto& p : g.points)
        for (auto& c : p) c = parse_double(next(), path);
    } else if (word == "CELLS") {
      g.cells.resize(count());
      next();
      for (auto& c : g.cells) {
        if (parse_long(next(), path) != 8) bad_file(path, "only hexahedral cells are supported");
        for (auto& v : c) {
          v = int(parse_long(next(), path));
          if (v < 0 || std::size_t(v) >= g.points.size()) bad_file(path, "cell refers to a missing point");
        }
      }
    } else if (word == "CELL_TYPES") {
      const auto n = count();
      for (std::size_t i = 0; i < n; ++i)
        if (next() != "12") bad_file(path, "only VTK_HEXAHEDRON cells are supported");
    } else if (word == "CELL_DATA") {
      ncell_data = count();
      if (ncell_data != g.cells.size()) bad_file(path, "CELL_DATA count differs from the cell count");
    } else if (word == "SCALARS") {
      const std::string name = next();
      const std::string type = next();
      std::string tok = next();
      if (tok != "LOOKUP_TABLE") {
        if (tok != "1") bad_file(path, "array '" + name + "' must have one component");
        if (next() != "LOOKUP_TABLE") bad_file(path, "expected LOOKUP_TABLE");
      }
      next();
      std::vector<double> values(ncell_data);
      for (auto& v : values) v = parse_double(next(), path);
      if (name == "element_id") {
        g.element_ids.clear();
        for (double v : values) g.element_ids.push_back(int(v));
      } else {
        g.cell_data[name] = std::move(values);
      }
    } else {
      bad_file(path, "unexpected keyword '" + word + "'");
    }
  }
  if (g.element_ids.size() != g.cells.size()) bad_file(path, "missing element_id array");
  return g;
}

Topology topology_from_vtk(const Domain& domain, const VtkGrid& grid) {
  check_dims(domain, grid.dims, "vtk");
  const auto occ = grid.cell_data.find("occupancy");
  if (grid.full_domain && occ == grid.cell_data.end())
    throw Error(ErrorCode::IoError, "vtk: a full-domain grid needs an occupancy array");
  std::vector<std::uint8_t> solid(domain.element_count(), 0);
  for (std::size_t i = 0; i < grid.element_ids.size(); ++i) {
    const int e = grid.element_ids[i];
    if (e < 0 || std::size_t(e) >= solid.size()) throw Error(ErrorCode::IoError, "vtk: element id out of range");
    const bool is_solid = !grid.full_domain || occ->second[i] == 1.0;
    if (is_solid && !domain.in_design(e))
      throw Error(ErrorCode::IoError, "vtk: solid cell " + std::to_string(e) + " lies outside the design domain");
    solid[std::size_t(e)] = is_solid ? 1 : 0;
  }
  return Topology(domain, std::move(solid));
}

// ---------------------------------------------------------------------------
// Surface

void export_surface(const Domain& domain, const Topology& topology, const std::string& path) {
  const int n[3] = {domain.nx(), domain.ny(), domain.nz()};
  auto solid_at = [&](std::array<int, 3> ijk) {
    for (int a = 0; a < 3; ++a)
      if (ijk[a] < 0 || ijk[a] >= n[a]) return false;
    return topology.solid(domain.element_index(ijk[0], ijk[1], ijk[2]));
  };

  std::vector<std::array<int, 4>> faces;
  for (std::size_t e = 0; e < domain.element_count(); ++e) {
    if (!topology.solid(int(e))) continue;
    const auto ijk = domain.element_ijk(int(e));
    for (int a = 0; a < 3; ++a) {
      for (int side = 0; side < 2; ++side) {
        auto nb = ijk;
        nb[a] += side ? 1 : -1;
        if (solid_at(nb)) continue;
        // (u, v) cyclic after a, so u x v points along +a
        const int u = (a + 1) % 3, v = (a + 2) % 3;
        static constexpr int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        std::array<int, 4> quad{};
        for (int c = 0; c < 4; ++c) {
          auto p = ijk;
          p[a] += side;
          p[u] += uv[c][0];
          p[v] += uv[c][1];
          quad[std::size_t(side ? c : 3 - c)] = domain.node_index(p[0], p[1], p[2]);
        }
        faces.push_back(quad);
      }
    }
  }

  std::vector<int> vertex_of(domain.node_count(), 0);
  for (const auto& f : faces)
    for (int v : f) vertex_of[std::size_t(v)] = 1;
  std::vector<int> vertices;
  for (std::size_t v = 0; v < vertex_of.size(); ++v)
    if (vertex_of[v]) {
      vertex_of[v] = int(vertices.size()) + 1;
      vertices.push_back(int(v));
    }

  auto out = open_out(path);
  out << "# atls surface " << grid_header(domain) << "\n";
  for (int v : vertices) {
    const auto p = domain.node_position(v);
    out << "v " << format_double(p[0]) << " " << format_double(p[1]) << " " << format_double(p[2]) << "\n";
  }
  for (const auto& f : faces)
    out << "f " << vertex_of[std::size_t(f[0])] << " " << vertex_of[std::size_t(f[1])] << " "
        << vertex_of[std::size_t(f[2])] << " " << vertex_of[std::size_t(f[3])] << "\n";
  close_out(out, path);
}

Topology read_surface(const Domain& domain, const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  {
    std::istringstream s(line);
    std::string hash, tag, kind;
    std::array<int, 3> dims{};
    s >> hash >> tag >> kind >> dims[0] >> dims[1] >> dims[2];
    if (!s || hash != "#" || tag != "atls" || kind != "surface") bad_file(path, "missing atls surface header");
    check_dims(domain, dims, path);
  }
  std::vector<Vec3> verts;
  // x-normal faces keyed by (j, k), value = plane index along x
  std::map<std::pair<int, int>, std::vector<int>> x_faces;
  const double h = domain.h();
  const auto& o = domain.origin();
  while (std::getline(in, line)) {
    std::istringstream s(line);
    std::string tag;
    s >> tag;
    if (tag == "v") {
      Vec3 p{};
      s >> p[0] >> p[1] >> p[2];
      if (!s) bad_file(path, "bad vertex line");
      verts.push_back(p);
    } else if (tag == "f") {
      std::array<long, 4> idx{};
      for (auto& i : idx) {
        std::string tok;
        s >> tok;
        i = parse_long(tok.substr(0, tok.find('/')), path);
        if (i < 1 || std::size_t(i) > verts.size()) bad_file(path, "face refers to a missing vertex");
      }
      Vec3 lo = verts[std::size_t(idx[0] - 1)], hi = lo;
      for (long i : idx)
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], verts[std::size_t(i - 1)][a]);
          hi[a] = std::max(hi[a], verts[std::size_t(i - 1)][a]);
        }
      if (hi[0] - lo[0] > 1e-6 * h) continue;
      const int plane = int(std::lround((lo[0] - o[0]) / h));
      const int j = int(std::lround((lo[1] - o[1]) / h)), k = int(std::lround((lo[2] - o[2]) / h));
      x_faces[{j, k}].push_back(plane);
    } else if (!tag.empty() && tag[0] != '#') {
      bad_file(path, "unexpected record '" + tag + "'");
    }
  }
  std::vector<std::uint8_t> solid(domain.element_count(), 0);
  for (auto& [jk, planes] : x_faces) {
    std::sort(planes.begin(), planes.end());
    for (int i = 0; i < domain.nx(); ++i) {
      const auto crossings = planes.end() - std::upper_bound(planes.begin(), planes.end(), i);
      if (crossings % 2 == 0) continue;
      if (jk.first < 0 || jk.first >= domain.ny() || jk.second < 0 || jk.second >= domain.nz())
        bad_file(path, "surface leaves the grid");
      const int e = domain.element_index(i, jk.first, jk.second);
      if (!domain.in_design(e)) bad_file(path, "surface encloses a non-design element");
      solid[std::size_t(e)] = 1;
    }
  }
  return Topology(domain, std::move(solid));
}

// ---------------------------------------------------------------------------
// History

namespace {
const char* kBlock[] = {"q_over_q0", "g", "mu", "gamma", "hard_violated"};
}

void export_history(const std::vector<IterationRecord>& records, const std::vector<std::string>& ids,
                    const std::string& path) {
  if (records.empty()) throw Error(ErrorCode::PreconditionViolated, "history is empty");
  double last_v = 2.0;
  for (const auto& r : records) {
    if (r.constraints.size() != ids.size())
      throw Error(ErrorCode::DimensionMismatch, "record " + std::to_string(r.k) + " has the wrong constraint count");
    if (!r.accepted) continue;
    if (!(r.v < last_v))
      throw Error(ErrorCode::PreconditionViolated,
                  "accepted volume fractions must strictly decrease (record " + std::to_string(r.k) + ")");
    last_v = r.v;
  }
  for (const auto& id : ids)
    if (id.find_first_of(",\"\n\r") != std::string::npos)
      throw Error(ErrorCode::PreconditionViolated, "constraint id '" + id + "' cannot be a CSV column name");

  auto out = open_out(path);
  out << "k,v,dv,accepted";
  for (const auto& id : ids)
    for (const char* b : kBlock) out << "," << id << "." << b;
  out << ",J,inner_iters\n";
  for (const auto& r : records) {
    out << r.k << "," << format_double(r.v) << "," << format_double(r.dv) << "," << (r.accepted ? 1 : 0);
    for (const auto& c : r.constraints)
      out << "," << format_double(c.q_over_q0) << "," << format_double(c.g) << "," << format_double(c.mu) << ","
          << format_double(c.gamma) << "," << (c.hard_violated ? 1 : 0);
    out << "," << format_double(r.J) << "," << r.inner_iterations << "\n";
  }
  close_out(out, path);
}

HistoryTable read_history(const std::string& path) {
  auto in = open_in(path);
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  std::string line;
  if (!std::getline(in, line)) bad_file(path, "empty file");
  const auto head = split(line);
  if (head.size() < 6 || head[0] != "k" || head[1] != "v" || head[2] != "dv" || head[3] != "accepted" ||
      head[head.size() - 2] != "J" || head.back() != "inner_iters" || (head.size() - 6) % 5 != 0)
    bad_file(path, "header does not match the history layout");
  HistoryTable t;
  for (std::size_t c = 4; c + 2 < head.size(); c += 5) {
    const std::string suffix = std::string(".") + kBlock[0];
    const auto& name = head[c];
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
      bad_file(path, "unexpected column '" + name + "'");
    const auto id = name.substr(0, name.size() - suffix.size());
    for (int b = 1; b < 5; ++b)
      if (head[c + std::size_t(b)] != id + "." + kBlock[b]) bad_file(path, "unexpected column '" + head[c + std::size_t(b)] + "'");
    t.constraint_ids.push_back(id);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != head.size()) bad_file(path, "row width differs from the header");
    IterationRecord r;
    r.k = int(parse_long(cells[0], path));
    r.v = parse_double(cells[1], path);
    r.dv = parse_double(cells[2], path);
    r.accepted = parse_long(cells[3], path) != 0;
    bool hard = false;
    for (std::size_t i = 0; i < t.constraint_ids.size(); ++i) {
      const std::size_t c = 4 + 5 * i;
      ConstraintRecord cr;
      cr.q_over_q0 = parse_double(cells[c], path);
      cr.g = parse_double(cells[c + 1], path);
      cr.mu = parse_double(cells[c + 2], path);
      cr.gamma = parse_double(cells[c + 3], path);
      cr.hard_violated = parse_long(cells[c + 4], path) != 0;
      hard = hard || cr.hard_violated;
      r.constraints.push_back(cr);
    }
    r.J = parse_double(cells[cells.size() - 2], path);
    r.inner_iterations = int(parse_long(cells.back(), path));
    r.outcome = r.accepted ? (r.k == 0 ? StepOutcome::Baseline : StepOutcome::Accepted)
                           : (hard ? StepOutcome::HardViolation : StepOutcome::InnerNotConverged);
    t.records.push_back(std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Snapshot

void export_snapshot(const Domain& domain, const Snapshot& snap, const std::string& path) {
  std::string bits(domain.element_count(), '0');
  for (std::size_t e = 0; e < bits.size(); ++e)
    if (snap.topology.solid(int(e))) bits[e] = '1';
  ojson cons = ojson::array();
  const auto& s = snap.state;
  for (std::size_t i = 0; i < snap.constraint_ids.size(); ++i)
    cons.push_back(ojson{{"id", snap.constraint_ids[i]},
                         {"q0", s.q0.at(i)},
                         {"mu", s.mu.at(i)},
                         {"gamma", s.gamma.at(i)},
                         {"g", s.g.at(i)},
                         {"g_prev", s.g_prev.at(i)}});
  ojson j{{"format", "atls-snapshot"},
          {"version", 1},
          {"dims", ojson::array({domain.nx(), domain.ny(), domain.nz()})},
          {"k", snap.k},
          {"volume_fraction", snap.topology.volume_fraction()},
          {"solid_count", snap.topology.solid_count()},
          {"constraints", cons},
          {"solid", bits}};
  auto out = open_out(path);
  out << j.dump(1) << "\n";
  close_out(out, path);
}

Snapshot read_snapshot(const Domain& domain, const std::string& path) {
  auto in = open_in(path);
  try {
    const auto j = ojson::parse(in);
    if (j.at("format") != "atls-snapshot" || j.at("version") != 1) bad_file(path, "not an atls snapshot");
    Snapshot s;
    for (int a = 0; a < 3; ++a) s.dims[std::size_t(a)] = j.at("dims").at(std::size_t(a)).get<int>();
    check_dims(domain, s.dims, path);
    s.k = j.at("k").get<int>();
    const auto bits = j.at("solid").get<std::string>();
    if (bits.size() != domain.element_count()) bad_file(path, "occupancy string has the wrong length");
    std::vector<std::uint8_t> solid(bits.size());
    for (std::size_t e = 0; e < bits.size(); ++e) {
      if (bits[e] != '0' && bits[e] != '1') bad_file(path, "occupancy string must hold only 0 and 1");
      solid[e] = bits[e] == '1';
      if (solid[e] && !domain.in_design(int(e))) bad_file(path, "solid element outside the design domain");
    }
    s.topology = Topology(domain, std::move(solid));
    for (const auto& c : j.at("constraints")) {
      s.constraint_ids.push_back(c.at("id").get<std::string>());
      s.state.q0.push_back(c.at("q0").get<double>());
      s.state.mu.push_back(c.at("mu").get<double>());
      s.state.gamma.push_back(c.at("gamma").get<double>());
      s.state.g.push_back(c.at("g").get<double>());
      s.state.g_prev.push_back(c.at("g_prev").get<double>());
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    bad_file(path, e.what());
  }
}

// ---------------------------------------------------------------------------
// Summary

RunSummary summarize(const Problem& problem, const RunResult& result, double wall_seconds) {
  RunSummary s;
  s.termination = to_string(result.termination);
  s.final_v = result.topology.volume_fraction();
  s.solid_count = result.topology.solid_count();
  s.design_count = result.topology.design_count();
  s.wall_seconds = wall_seconds;
  if (!result.history.empty()) s.J0 = result.history.front().J;
  if (result.evaluation) s.J = result.evaluation->total_compliance;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const auto& c = problem.constraints[i];
    ConstraintSummary cs;
    cs.id = c.id;
    cs.kind = to_string(c.kind);
    cs.soft = c.soft;
    cs.alpha = c.alpha;
    cs.q0 = result.state.q0.at(i);
    cs.q = result.evaluation ? result.evaluation->constraints.at(i).q : 0.0;
    cs.q_over_q0 = cs.q / cs.q0;
    cs.g = result.state.g.at(i);
    cs.mu = result.state.mu.at(i);
    cs.gamma = result.state.gamma.at(i);
    cs.active = std::abs(cs.g) <= kActiveTolerance;
    s.constraints.push_back(cs);
  }
  std::vector<int> inner;
  int streak = 0;
  for (const auto& r : result.history) {
    if (r.k == 0) continue;
    inner.push_back(r.inner_iterations);
    s.inner_iterations_total += r.inner_iterations;
    s.inner_iterations_max = std::max(s.inner_iterations_max, r.inner_iterations);
    if (r.accepted) {
      ++s.accepted_steps;
      streak = 0;
    } else {
      ++s.rejected_steps;
      s.max_consecutive_rejections = std::max(s.max_consecutive_rejections, ++streak);
    }
  }
  s.outer_iterations = int(inner.size());
  if (!inner.empty()) {
    std::sort(inner.begin(), inner.end());
    const std::size_t m = inner.size() / 2;
    s.inner_iterations_median = inner.size() % 2 ? inner[m] : 0.5 * (inner[m - 1] + inner[m]);
  }
  return s;
}

void export_summary(const RunSummary& s, const std::string& path) {
  ojson cons = ojson::array();
  for (const auto& c : s.constraints)
    cons.push_back(ojson{{"id", c.id},
                         {"kind", c.kind},
                         {"soft", c.soft},
                         {"alpha", c.alpha},
                         {"q0", c.q0},
                         {"q", c.q},
                         {"q_over_q0", c.q_over_q0},
                         {"g", c.g},
                         {"mu", c.mu},
                         {"gamma", c.gamma},
                         {"active", c.active}});
  ojson j{{"termination", s.termination},
          {"final_v", s.final_v},
          {"solid_count", s.solid_count},
          {"design_count", s.design_count},
          {"J0", s.J0},
          {"J", s.J},
          {"constraints", cons},
          {"wall_seconds", s.wall_seconds},
          {"iterations",
           ojson{{"outer", s.outer_iterations},
                 {"accepted", s.accepted_steps},
                 {"rejected", s.rejected_steps},
                 {"max_consecutive_rejections", s.max_consecutive_rejections},
                 {"inner_total", s.inner_iterations_total},
                 {"inner_median", s.inner_iterations_median},
                 {"inner_max", s.inner_iterations_max}}},
          {"final_snapshot", s.final_snapshot}};
  j["config"] = s.config_echo.empty() ? ojson(nullptr) : ojson::parse(s.config_echo);
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  close_out(out, path);
}

RunSummary read_summary(const std::string& path) {
  auto in = open_in(path);
  try {
    const auto j = ojson::parse(in);
    RunSummary s;
    s.termination = j.at("termination").get<std::string>();
    s.final_v = j.at("final_v").get<double>();
    s.solid_count = j.at("solid_count").get<std::size_t>();
    s.design_count = j.at("design_count").get<std::size_t>();
    s.J0 = j.at("J0").get<double>();
    s.J = j.at("J").get<double>();
    for (const auto& c : j.at("constraints")) {
      ConstraintSummary cs;
      cs.id = c.at("id").get<std::string>();
      cs.kind = c.at("kind").get<std::string>();
      cs.soft = c.at("soft").get<bool>();
      cs.alpha = c.at("alpha").get<double>();
      cs.q0 = c.at("q0").get<double>();
      cs.q = c.at("q").get<double>();
      cs.q_over_q0 = c.at("q_over_q0").get<double>();
      cs.g = c.at("g").get<double>();
      cs.mu = c.at("mu").get<double>();
      cs.gamma = c.at("gamma").get<double>();
      cs.active = c.at("active").get<bool>();
      s.constraints.push_back(cs);
    }
    s.wall_seconds = j.at("wall_seconds").get<double>();
    const auto& it = j.at("iterations");
    s.outer_iterations = it.at("outer").get<int>();
    s.accepted_steps = it.at("accepted").get<int>();
    s.rejected_steps = it.at("rejected").get<int>();
    s.max_consecutive_rejections = it.at("max_consecutive_rejections").get<int>();
    s.inner_iterations_total = it.at("inner_total").get<int>();
    s.inner_iterations_median = it.at("inner_median").get<double>();
    s.inner_iterations_max = it.at("inner_max").get<int>();
    s.final_snapshot = j.at("final_snapshot").get<std::string>();
    if (!j.at("config").is_null()) s.config_echo = j.at("config").dump(2) + "\n";
    return s;
  } catch (const nlohmann::json::exception& e) {
    bad_file(path, e.what());
  }
}

}  // namespace atls
