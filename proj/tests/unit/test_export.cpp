#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "error.hpp"
#include "export.hpp"
#include "fixtures.hpp"
#include "log.hpp"

using namespace atls;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "atls_export_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Topology random_topology(const Domain& d, std::mt19937& rng, double p) {
  std::vector<std::uint8_t> flags(d.element_count(), 0);
  std::bernoulli_distribution coin(p);
  for (std::size_t e = 0; e < flags.size(); ++e)
    if (d.in_design(int(e))) flags[e] = coin(rng);
  return Topology(d, flags);
}

FieldSet ramp_fields(const Domain& d) {
  FieldSet f;
  for (const char* name : {"occupancy", "von_mises", "T_compliance", "T_stress", "T_eigen", "T_buckling", "T_combined"}) {
    ScalarField v(d.element_count());
    for (std::size_t e = 0; e < v.size(); ++e) v[e] = std::sin(double(e) * 0.37 + double(f.size())) * 1e3 / 7.0;
    f.emplace_back(name, v);
  }
  return f;
}

IterationRecord rec(int k, double v, bool accepted, double dv = 0.025) {
  IterationRecord r;
  r.k = k;
  r.v = v;
  r.dv = dv;
  r.accepted = accepted;
  r.J = 1.0 / v;
  r.inner_iterations = k == 0 ? 0 : 2;
  ConstraintRecord c;
  c.q = r.J;
  c.q_over_q0 = r.J;
  c.g = r.J / 2 - 1;
  c.mu = 100.0 + k;
  c.gamma = 10.0;
  c.hard_violated = !accepted;
  r.constraints = {c};
  return r;
}

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, double(int(rng() % 40) - 20));
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(format_double(0.025), "0.025");
}

TEST(Vtk, SingleElementFile) {
  const auto d = Domain::build(atls::testing::grid(1, 1, 1));
  const auto path = scratch("one.vtk");
  export_vtk(d, Topology(d), ramp_fields(d), path.string());
  const auto g = read_vtk(path.string());
  EXPECT_EQ(g.points.size(), 8u);
  ASSERT_EQ(g.cells.size(), 1u);
  EXPECT_EQ(g.cells[0], (std::array<int, 8>{0, 1, 3, 2, 4, 5, 7, 6}));
  for (const char* name : {"occupancy", "von_mises", "T_compliance", "T_stress", "T_eigen", "T_buckling", "T_combined"})
    EXPECT_EQ(g.cell_data.count(name), 1u) << name;
  const auto text = slurp(path);
  EXPECT_NE(text.find("ASCII"), std::string::npos);
  EXPECT_NE(text.find("CELL_TYPES 1\n12\n"), std::string::npos);
}

TEST(Vtk, EmptyTopologyWritesZeroCellsAndWarns) {
  const auto d = Domain::build(atls::testing::grid(3, 2, 2));
  std::vector<std::string> warnings;
  auto previous = set_log_sink([&](LogLevel level, const std::string& m) {
    if (level == LogLevel::Warning) warnings.push_back(m);
  });
  const auto path = scratch("empty.vtk");
  export_vtk(d, Topology(d, std::vector<std::uint8_t>(d.element_count(), 0)), ramp_fields(d), path.string());
  set_log_sink(previous);
  ASSERT_EQ(warnings.size(), 1u);
  const auto g = read_vtk(path.string());
  EXPECT_TRUE(g.cells.empty());
  EXPECT_TRUE(g.points.empty());
}

TEST(Vtk, RoundTripsValuesAndTopology) {
  std::mt19937 rng(5);
  auto dc = atls::testing::grid(7, 5, 3, 0.25);
  dc.mask.push_back({CsgOp::Subtract, BoxShape{{0, 0, 0}, {0.6, 0.6, 1}}});
  const auto d = Domain::build(dc);
  const auto fields = ramp_fields(d);
  for (bool full : {false, true}) {
    const auto t = random_topology(d, rng, 0.6);
    const auto path = scratch(full ? "full.vtk" : "solid.vtk");
    export_vtk(d, t, fields, path.string(), full);
    const auto g = read_vtk(path.string());
    EXPECT_EQ(g.cells.size(), full ? d.element_count() : t.solid_count());
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      const int e = g.element_ids[i];
      for (const auto& [name, values] : fields) EXPECT_EQ(g.cell_data.at(name)[i], values[std::size_t(e)]);
      // cell corners sit at the element's node positions
      const auto nodes = d.element_nodes(e);
      const auto p0 = g.points[std::size_t(g.cells[i][0])];
      EXPECT_EQ(p0, d.node_position(nodes[0]));
    }
    if (full) {
      // occupancy array drives re-import on the full grid; rebuild it from t
      FieldSet occ = fields;
      for (std::size_t e = 0; e < d.element_count(); ++e)
        occ[0].second[e] = d.in_design(int(e)) ? t.occupancy(int(e)) : 0.0;
      export_vtk(d, t, occ, path.string(), true);
    }
    EXPECT_EQ(topology_from_vtk(d, read_vtk(path.string())), t);
  }
}

TEST(Vtk, RejectsMismatchedGrid) {
  const auto d = Domain::build(atls::testing::grid(2, 2, 2));
  const auto other = Domain::build(atls::testing::grid(3, 2, 2));
  const auto path = scratch("mismatch.vtk");
  export_vtk(d, Topology(d), ramp_fields(d), path.string());
  EXPECT_THROW(topology_from_vtk(other, read_vtk(path.string())), Error);
  EXPECT_THROW(read_vtk(scratch("missing.vtk").string()), Error);
}

TEST(Vtk, DeterministicBytes) {
  const auto d = Domain::build(atls::testing::grid(5, 4, 3));
  std::mt19937 rng(9);
  const auto t = random_topology(d, rng, 0.5);
  export_vtk(d, t, ramp_fields(d), scratch("a.vtk").string());
  export_vtk(d, t, ramp_fields(d), scratch("b.vtk").string());
  EXPECT_EQ(slurp(scratch("a.vtk")), slurp(scratch("b.vtk")));
}

TEST(Surface, ClosedOrientedAndReadable) {
  std::mt19937 rng(21);
  auto dc = atls::testing::grid(6, 5, 4, 0.5);
  dc.origin = {-1, 2, 0.5};
  dc.mask.push_back({CsgOp::Subtract, BoxShape{{-1, 2, 0.5}, {0.1, 3.1, 1.1}}});
  const auto d = Domain::build(dc);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_topology(d, rng, trial % 2 ? 0.3 : 0.8);
    const auto path = scratch("surf.obj");
    export_surface(d, t, path.string());

    // every directed edge is matched by its reverse: closed and consistently oriented
    std::map<std::pair<int, int>, int> edges;
    std::ifstream in(path);
    std::string line;
    std::size_t faces = 0;
    while (std::getline(in, line)) {
      if (line.rfind("f ", 0) != 0) continue;
      std::istringstream s(line.substr(2));
      int q[4];
      s >> q[0] >> q[1] >> q[2] >> q[3];
      for (int i = 0; i < 4; ++i) edges[{q[i], q[(i + 1) % 4]}]++;
      ++faces;
    }
    for (const auto& [e, n] : edges) EXPECT_EQ(n, (edges[{e.second, e.first}]));

    // face count: exposed faces of solid voxels, counted directly
    std::size_t exposed = 0;
    for (std::size_t e = 0; e < d.element_count(); ++e) {
      if (!t.solid(int(e))) continue;
      const auto ijk = d.element_ijk(int(e));
      for (int a = 0; a < 3; ++a)
        for (int s : {-1, 1}) {
          auto nb = ijk;
          nb[a] += s;
          const int n[3] = {d.nx(), d.ny(), d.nz()};
          const bool inside = nb[a] >= 0 && nb[a] < n[a];
          if (!inside || !t.solid(d.element_index(nb[0], nb[1], nb[2]))) ++exposed;
        }
    }
    EXPECT_EQ(faces, exposed);
    EXPECT_EQ(read_surface(d, path.string()), t);
  }
}

TEST(History, ThreeRecordsGiveHeaderPlusThreeRows) {
  const std::vector<IterationRecord> h = {rec(0, 1.0, true, 0.0), rec(1, 0.975, true), rec(2, 0.95, false)};
  const auto path = scratch("h.csv");
  export_history(h, {"J"}, path.string());
  const auto text = slurp(path);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "k,v,dv,accepted,J.q_over_q0,J.g,J.mu,J.gamma,J.hard_violated,J,inner_iters");
  EXPECT_NE(text.find("\n1,0.975,0.025,1,"), std::string::npos);

  const auto t = read_history(path.string());
  EXPECT_EQ(t.constraint_ids, std::vector<std::string>{"J"});
  ASSERT_EQ(t.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(t.records[i].v, h[i].v);
    EXPECT_EQ(t.records[i].accepted, h[i].accepted);
    EXPECT_EQ(t.records[i].constraints[0].g, h[i].constraints[0].g);
    EXPECT_EQ(t.records[i].constraints[0].hard_violated, h[i].constraints[0].hard_violated);
  }
  EXPECT_EQ(t.records[2].outcome, StepOutcome::HardViolation);
}

TEST(History, ExportRechecksDriverInvariants) {
  EXPECT_THROW(export_history({}, {"J"}, scratch("x.csv").string()), Error);
  const std::vector<IterationRecord> bad = {rec(0, 1.0, true), rec(1, 0.975, true), rec(2, 0.975, true)};
  try {
    export_history(bad, {"J"}, scratch("x.csv").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
  }
  // rejected rows may repeat or exceed the last accepted v
  const std::vector<IterationRecord> ok = {rec(0, 1.0, true), rec(1, 0.95, false), rec(2, 0.975, true)};
  EXPECT_NO_THROW(export_history(ok, {"J"}, scratch("x.csv").string()));
  EXPECT_THROW(export_history(ok, {"J", "extra"}, scratch("x.csv").string()), Error);
}

TEST(Snapshot, RoundTrip) {
  const auto d = Domain::build(atls::testing::grid(4, 3, 2));
  std::mt19937 rng(2);
  Snapshot s;
  s.dims = {4, 3, 2};
  s.k = 17;
  s.topology = random_topology(d, rng, 0.5);
  s.constraint_ids = {"J", "sigma"};
  s.state.q0 = {1.5e-3, 2.0 / 3.0};
  s.state.mu = {0.0, 123.456};
  s.state.gamma = {10.0, 1e4};
  s.state.g = {-0.1, 1e-7};
  s.state.g_prev = s.state.g;
  const auto path = scratch("s.topo");
  export_snapshot(d, s, path.string());
  const auto r = read_snapshot(d, path.string());
  EXPECT_EQ(r.k, 17);
  EXPECT_EQ(r.topology, s.topology);
  EXPECT_EQ(r.constraint_ids, s.constraint_ids);
  EXPECT_EQ(r.state.q0, s.state.q0);
  EXPECT_EQ(r.state.mu, s.state.mu);
  EXPECT_EQ(r.state.gamma, s.state.gamma);
  EXPECT_EQ(r.state.g, s.state.g);
  EXPECT_THROW(read_snapshot(Domain::build(atls::testing::grid(4, 3, 3)), path.string()), Error);
}

TEST(Summary, RoundTripAndActiveFlags) {
  RunSummary s;
  s.termination = "step_collapsed";
  s.final_v = 0.34;
  s.J0 = 1.0;
  s.J = 1.99;
  ConstraintSummary a;
  a.id = "J";
  a.kind = "compliance";
  a.g = -5e-4;
  a.active = std::abs(a.g) <= kActiveTolerance;
  ConstraintSummary b = a;
  b.id = "sigma";
  b.g = -0.4;
  b.active = std::abs(b.g) <= kActiveTolerance;
  s.constraints = {a, b};
  s.outer_iterations = 30;
  s.inner_iterations_median = 2.5;
  s.final_snapshot = "final.topo";
  s.config_echo = "{\n  \"schema_version\": 1\n}\n";
  const auto path = scratch("summary.json");
  export_summary(s, path.string());
  const auto r = read_summary(path.string());
  EXPECT_EQ(r.termination, s.termination);
  EXPECT_EQ(r.final_v, s.final_v);
  ASSERT_EQ(r.constraints.size(), 2u);
  EXPECT_TRUE(r.constraints[0].active);
  EXPECT_FALSE(r.constraints[1].active);
  EXPECT_EQ(r.inner_iterations_median, 2.5);
  EXPECT_EQ(r.final_snapshot, "final.topo");
  EXPECT_EQ(r.config_echo, s.config_echo);
}
