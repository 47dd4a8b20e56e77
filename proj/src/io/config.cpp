#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace atls {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* to_string(SnapshotCadence cadence) {
  return cadence == SnapshotCadence::EveryAccepted ? "every_accepted" : "final";
}

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::SchemaError, (path.empty() ? std::string("<root>") : path) + ": " + why);
}

[[noreturn]] void semantic_fail(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::SemanticError, path + ": " + why);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string suggest(const std::string& word, const std::vector<std::string>& options) {
  std::string best;
  std::size_t best_d = 3;
  for (const auto& o : options) {
    const auto d = edit_distance(word, o);
    if (d < best_d) best_d = d, best = o;
  }
  return best.empty() ? "" : " (did you mean '" + best + "'?)";
}

// An object whose keys are checked off as they are read; finish() rejects the rest.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) schema_fail(path_, "expected an object");
  }

  const json* find(const std::string& key) {
    known_.push_back(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& need(const std::string& key) {
    const json* v = find(key);
    if (!v) schema_fail(at(key), "required key is missing");
    return *v;
  }
  std::string at(const std::string& key) const { return join(path_, key); }
  const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (std::find(known_.begin(), known_.end(), item.key()) == known_.end())
        schema_fail(at(item.key()), "unknown key '" + item.key() + "'" + suggest(item.key(), known_));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> known_;
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) schema_fail(path, "expected a finite number");
  return x;
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_fail(path, "expected an integer");
  const auto x = v.get<long long>();
  if (x < -2147483647LL || x > 2147483647LL) schema_fail(path, "integer out of range");
  return int(x);
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) schema_fail(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) schema_fail(path, "expected a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) schema_fail(path, "expected an array");
  return v;
}

template <std::size_t N>
std::array<double, N> as_vec(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != N) schema_fail(path, "expected an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = as_number(v[i], index(path, i));
  return out;
}

template <typename E>
E as_enum(const json& v, const std::string& path, const std::vector<std::pair<std::string, E>>& table) {
  const auto s = as_string(v, path);
  std::vector<std::string> names;
  for (const auto& [name, value] : table) {
    if (name == s) return value;
    names.push_back(name);
  }
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  schema_fail(path, "unknown value '" + s + "'" + suggest(s, names) + "; expected one of: " + list);
}

void read(Obj& o, const std::string& key, double& out) {
  if (const auto* v = o.find(key)) out = as_number(*v, o.at(key));
}
void read(Obj& o, const std::string& key, int& out) {
  if (const auto* v = o.find(key)) out = as_int(*v, o.at(key));
}
void read(Obj& o, const std::string& key, bool& out) {
  if (const auto* v = o.find(key)) out = as_bool(*v, o.at(key));
}
void read(Obj& o, const std::string& key, std::string& out) {
  if (const auto* v = o.find(key)) out = as_string(*v, o.at(key));
}
void read(Obj& o, const std::string& key, unsigned& out) {
  if (const auto* v = o.find(key)) {
    if (!v->is_number_integer() || v->get<long long>() < 0 || v->get<long long>() > 4294967295LL)
      schema_fail(o.at(key), "expected a non-negative 32-bit integer");
    out = unsigned(v->get<long long>());
  }
}

void require(bool ok, const std::string& path, const std::string& why) {
  if (!ok) schema_fail(path, why);
}

const std::vector<std::pair<std::string, Axis>> kAxes = {{"x", Axis::X}, {"y", Axis::Y}, {"z", Axis::Z}};
const std::vector<std::pair<std::string, CsgOp>> kOps = {{"add", CsgOp::Add}, {"subtract", CsgOp::Subtract}};
const std::vector<std::pair<std::string, SelectTarget>> kTargets = {{"nodes", SelectTarget::Nodes},
                                                                   {"elements", SelectTarget::Elements}};
const std::vector<std::pair<std::string, LoadDistribution>> kDistributions = {
    {"total", LoadDistribution::Total}, {"per_node", LoadDistribution::PerNode}};
const std::vector<std::pair<std::string, ConstraintKind>> kKinds = {{"compliance", ConstraintKind::Compliance},
                                                                   {"pnorm_stress", ConstraintKind::PNormStress},
                                                                   {"eigenvalue", ConstraintKind::Eigenvalue},
                                                                   {"buckling", ConstraintKind::Buckling}};
const std::vector<std::pair<std::string, Sense>> kSenses = {{"upper", Sense::Upper}, {"lower", Sense::Lower}};
const std::vector<std::pair<std::string, SnapshotCadence>> kCadences = {{"every_accepted", SnapshotCadence::EveryAccepted},
                                                                       {"final", SnapshotCadence::Final}};

const char* axis_name(Axis a) { return a == Axis::X ? "x" : a == Axis::Y ? "y" : "z"; }

BoxShape parse_box(const json& j, const std::string& path) {
  Obj o(j, path);
  BoxShape b;
  b.min = as_vec<3>(o.need("min"), o.at("min"));
  b.max = as_vec<3>(o.need("max"), o.at("max"));
  o.finish();
  for (int a = 0; a < 3; ++a) require(b.min[a] <= b.max[a], path, "min must not exceed max");
  return b;
}

// Exactly one shape key next to an optional extra key set handled by the caller.
template <typename Variant, typename Extra>
Variant parse_shape(Obj& o, const std::vector<std::string>& shapes, Extra&& parse_one) {
  const json* found = nullptr;
  std::string which;
  for (const auto& s : shapes) {
    if (const auto* v = o.find(s)) {
      if (found) schema_fail(o.path(), "give exactly one of " + shapes.front() + "/" + shapes.back() + ", not both '" + which + "' and '" + s + "'");
      found = v, which = s;
    }
  }
  if (!found) {
    std::string list;
    for (const auto& s : shapes) list += (list.empty() ? "" : ", ") + s;
    schema_fail(o.path(), "missing shape; expected one of: " + list);
  }
  return parse_one(which, *found, o.at(which));
}

MaskPrimitive parse_mask(const json& j, const std::string& path) {
  Obj o(j, path);
  MaskPrimitive m;
  m.op = as_enum(o.need("op"), o.at("op"), kOps);
  m.shape = parse_shape<std::variant<BoxShape, CylinderShape>>(
      o, {"box", "cylinder"}, [](const std::string& which, const json& v, const std::string& p) {
        if (which == "box") return std::variant<BoxShape, CylinderShape>(parse_box(v, p));
        Obj c(v, p);
        CylinderShape cyl;
        if (const auto* a = c.find("axis")) cyl.axis = as_enum(*a, c.at("axis"), kAxes);
        cyl.center = as_vec<2>(c.need("center"), c.at("center"));
        cyl.radius = as_number(c.need("radius"), c.at("radius"));
        cyl.lo = as_number(c.need("lo"), c.at("lo"));
        cyl.hi = as_number(c.need("hi"), c.at("hi"));
        c.finish();
        require(cyl.radius > 0.0, c.at("radius"), "must be > 0");
        require(cyl.lo <= cyl.hi, c.at("lo"), "lo must not exceed hi");
        return std::variant<BoxShape, CylinderShape>(cyl);
      });
  o.finish();
  return m;
}

DomainConfig parse_domain(const json& j, const std::string& path) {
  Obj o(j, path);
  DomainConfig d;
  const auto& dims = o.need("dims");
  if (!dims.is_array() || dims.size() != 3) schema_fail(o.at("dims"), "expected [nx, ny, nz]");
  int* n[3] = {&d.nx, &d.ny, &d.nz};
  for (std::size_t i = 0; i < 3; ++i) {
    *n[i] = as_int(dims[i], index(o.at("dims"), i));
    require(*n[i] >= 1, index(o.at("dims"), i), "must be >= 1");
  }
  d.h = as_number(o.need("h"), o.at("h"));
  require(d.h > 0.0, o.at("h"), "must be > 0");
  if (const auto* v = o.find("origin")) d.origin = as_vec<3>(*v, o.at("origin"));
  read(o, "start_full", d.start_full);
  if (const auto* v = o.find("mask")) {
    const auto& arr = as_array(*v, o.at("mask"));
    for (std::size_t i = 0; i < arr.size(); ++i) d.mask.push_back(parse_mask(arr[i], index(o.at("mask"), i)));
  }
  o.finish();
  return d;
}

RegionSelector parse_region(const json& j, const std::string& path) {
  Obj o(j, path);
  RegionSelector r;
  r.shape = parse_shape<std::variant<BoxShape, SphereShape, IdList>>(
      o, {"box", "sphere", "ids"}, [](const std::string& which, const json& v, const std::string& p) {
        using V = std::variant<BoxShape, SphereShape, IdList>;
        if (which == "box") return V(parse_box(v, p));
        if (which == "sphere") {
          Obj s(v, p);
          SphereShape sp;
          sp.center = as_vec<3>(s.need("center"), s.at("center"));
          sp.radius = as_number(s.need("radius"), s.at("radius"));
          s.finish();
          require(sp.radius >= 0.0, s.at("radius"), "must be >= 0");
          return V(sp);
        }
        IdList ids;
        const auto& arr = as_array(v, p);
        for (std::size_t i = 0; i < arr.size(); ++i) {
          ids.ids.push_back(as_int(arr[i], index(p, i)));
          require(ids.ids.back() >= 0, index(p, i), "must be >= 0");
        }
        return V(ids);
      });
  if (const auto* v = o.find("target")) r.target = as_enum(*v, o.at("target"), kTargets);
  o.finish();
  return r;
}

LoadCase parse_load_case(const json& j, const std::string& path) {
  Obj o(j, path);
  LoadCase lc;
  lc.id = as_string(o.need("id"), o.at("id"));
  require(!lc.id.empty(), o.at("id"), "must not be empty");
  const auto& sup = as_array(o.need("supports"), o.at("supports"));
  for (std::size_t i = 0; i < sup.size(); ++i) {
    Obj s(sup[i], index(o.at("supports"), i));
    DirichletCondition d;
    d.region = parse_region(s.need("region"), s.at("region"));
    if (const auto* f = s.find("fixed")) {
      if (!f->is_array() || f->size() != 3) schema_fail(s.at("fixed"), "expected [bool, bool, bool]");
      for (std::size_t a = 0; a < 3; ++a) d.fixed[a] = as_bool((*f)[a], index(s.at("fixed"), a));
    }
    s.finish();
    lc.dirichlet.push_back(d);
  }
  if (const auto* v = o.find("loads")) {
    const auto& arr = as_array(*v, o.at("loads"));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Obj l(arr[i], index(o.at("loads"), i));
      NodalLoad load;
      load.region = parse_region(l.need("region"), l.at("region"));
      load.force = as_vec<3>(l.need("force"), l.at("force"));
      if (const auto* d = l.find("distribution")) load.distribution = as_enum(*d, l.at("distribution"), kDistributions);
      l.finish();
      lc.loads.push_back(load);
    }
  }
  o.finish();
  return lc;
}

ConstraintSpec parse_constraint(const json& j, const std::string& path, const std::vector<LoadCase>& cases) {
  Obj o(j, path);
  ConstraintSpec c;
  c.kind = as_enum(o.need("kind"), o.at("kind"), kKinds);
  c.id = to_string(c.kind);
  c.sense = natural_sense(c.kind);
  read(o, "id", c.id);
  read(o, "alpha", c.alpha);
  if (const auto* v = o.find("sense")) c.sense = as_enum(*v, o.at("sense"), kSenses);
  read(o, "soft", c.soft);
  if (const auto* v = o.find("load_case")) {
    c.load_case = as_string(*v, o.at("load_case"));
  } else {
    if (cases.size() != 1) schema_fail(o.at("load_case"), "required when more than one load case is defined");
    c.load_case = cases.front().id;
  }
  read(o, "p", c.p);
  read(o, "mode", c.mode);
  read(o, "allow_infeasible_start", c.allow_infeasible_start);
  o.finish();
  if (c.id.find_first_of(",\"\n\r") != std::string::npos)
    schema_fail(o.at("id"), "must not contain commas, quotes or line breaks (ids name CSV columns)");
  try {
    validate_constraint(c);
  } catch (const Error& e) {
    semantic_fail(path, e.what());
  }
  return c;
}

CastingSpec parse_casting(const json& j, const std::string& path) {
  Obj o(j, path);
  CastingSpec c;
  if (const auto* v = o.find("axis")) c.axis = as_enum(*v, o.at("axis"), kAxes);
  if (const auto* v = o.find("direction")) {
    const auto s = as_string(*v, o.at("direction"));
    if (s != "+" && s != "-") schema_fail(o.at("direction"), "expected \"+\" or \"-\"");
    c.positive = s == "+";
  }
  read(o, "two_sided", c.two_sided);
  read(o, "parting_plane", c.parting_plane);
  o.finish();
  return c;
}

OptimizerConfig parse_optimizer(const json& j, const std::string& path) {
  Obj o(j, path);
  OptimizerConfig c;
  read(o, "mu0", c.mu0);
  read(o, "gamma0", c.gamma0);
  read(o, "varsigma", c.varsigma);
  read(o, "eta", c.eta);
  read(o, "dv0", c.dv0);
  read(o, "dv_min", c.dv_min);
  read(o, "dv_growth", c.dv_growth);
  read(o, "growth_after", c.growth_after);
  read(o, "feasibility_tol", c.feasibility_tol);
  read(o, "max_iterations", c.max_iterations);
  if (const auto* v = o.find("inner")) {
    Obj in(*v, o.at("inner"));
    read(in, "max_iterations", c.inner.max_iterations);
    read(in, "compliance_tol", c.inner.compliance_tol);
    read(in, "topology_tol", c.inner.topology_tol);
    in.finish();
  }
  o.finish();
  try {
    validate(c);
  } catch (const Error& e) {
    semantic_fail(path, e.what());
  }
  return c;
}

SolverOptions parse_solver(const json& j, const std::string& path) {
  Obj o(j, path);
  SolverOptions s;
  read(o, "tol", s.tol);
  read(o, "max_iterations", s.max_iters);
  read(o, "deflation", s.deflation);
  read(o, "block", s.block);
  read(o, "threads", s.threads);
  o.finish();
  require(s.tol > 0.0 && s.tol < 1.0, o.at("tol"), "must lie in (0, 1)");
  require(s.max_iters >= 0, o.at("max_iterations"), "must be >= 0 (0 selects the size-based default)");
  require(s.block >= 1, o.at("block"), "must be >= 1");
  require(s.threads >= 1, o.at("threads"), "must be >= 1");
  return s;
}

EigenOptions parse_eigen(const json& j, const std::string& path) {
  Obj o(j, path);
  EigenOptions e;
  read(o, "count", e.count);
  read(o, "tol", e.tol);
  read(o, "max_iterations", e.max_iterations);
  read(o, "extra_vectors", e.extra_vectors);
  read(o, "seed", e.seed);
  o.finish();
  require(e.count >= 1, o.at("count"), "must be >= 1");
  require(e.tol > 0.0 && e.tol < 1.0, o.at("tol"), "must lie in (0, 1)");
  require(e.max_iterations >= 1, o.at("max_iterations"), "must be >= 1");
  require(e.extra_vectors >= 0, o.at("extra_vectors"), "must be >= 0");
  return e;
}

OutputConfig parse_output(const json& j, const std::string& path) {
  Obj o(j, path);
  OutputConfig out;
  read(o, "directory", out.directory);
  if (const auto* v = o.find("snapshots")) out.snapshots = as_enum(*v, o.at("snapshots"), kCadences);
  read(o, "full_domain_vtk", out.full_domain_vtk);
  read(o, "surface", out.surface);
  o.finish();
  require(!out.directory.empty(), o.at("directory"), "must not be empty");
  return out;
}

RunConfig parse_root(const json& j) {
  Obj o(j, "");
  RunConfig rc;
  rc.schema_version = as_int(o.need("schema_version"), "schema_version");
  if (rc.schema_version != kSchemaVersion)
    schema_fail("schema_version", "unsupported version " + std::to_string(rc.schema_version) + " (this build reads " +
                                      std::to_string(kSchemaVersion) + ")");
  rc.domain = parse_domain(o.need("domain"), "domain");
  if (const auto* v = o.find("material")) {
    Obj m(*v, "material");
    read(m, "E", rc.material.E);
    read(m, "nu", rc.material.nu);
    read(m, "rho", rc.material.rho);
    m.finish();
    require(rc.material.E > 0.0, "material.E", "must be > 0");
    require(rc.material.nu >= 0.0 && rc.material.nu < 0.5, "material.nu", "must lie in [0, 0.5)");
    require(rc.material.rho > 0.0, "material.rho", "must be > 0");
  }
  const auto& cases = as_array(o.need("load_cases"), "load_cases");
  if (cases.empty()) schema_fail("load_cases", "at least one load case is required");
  std::set<std::string> case_ids;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    rc.load_cases.push_back(parse_load_case(cases[i], index("load_cases", i)));
    if (!case_ids.insert(rc.load_cases.back().id).second)
      semantic_fail(index("load_cases", i) + ".id", "duplicate load case id '" + rc.load_cases.back().id + "'");
  }
  if (const auto* v = o.find("constraints")) {
    const auto& arr = as_array(*v, "constraints");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto p = index("constraints", i);
      rc.constraints.push_back(parse_constraint(arr[i], p, rc.load_cases));
      const auto& c = rc.constraints.back();
      if (!ids.insert(c.id).second) semantic_fail(p + ".id", "duplicate constraint id '" + c.id + "'");
      if (!case_ids.count(c.load_case))
        semantic_fail(p + ".load_case", "unknown load case '" + c.load_case + "'");
    }
  }
  if (const auto* v = o.find("casting"); v && !v->is_null()) {
    rc.casting = parse_casting(*v, "casting");
    const int n[3] = {rc.domain.nx, rc.domain.ny, rc.domain.nz};
    const int extent = n[int(rc.casting->axis)];
    if (rc.casting->two_sided && (rc.casting->parting_plane < 0 || rc.casting->parting_plane > extent))
      semantic_fail("casting.parting_plane", "must lie in [0, " + std::to_string(extent) + "]");
  }
  if (const auto* v = o.find("optimizer")) rc.optimizer = parse_optimizer(*v, "optimizer");
  if (const auto* v = o.find("solver")) rc.solver = parse_solver(*v, "solver");
  if (const auto* v = o.find("eigen")) rc.eigen = parse_eigen(*v, "eigen");
  if (const auto* v = o.find("output")) rc.output = parse_output(*v, "output");
  o.finish();
  return rc;
}

ojson vec(const Vec3& v) { return ojson::array({v[0], v[1], v[2]}); }

ojson echo_box(const BoxShape& b) { return ojson{{"min", vec(b.min)}, {"max", vec(b.max)}}; }

ojson echo_region(const RegionSelector& r) {
  ojson o = ojson::object();
  if (const auto* b = std::get_if<BoxShape>(&r.shape)) {
    o["box"] = echo_box(*b);
  } else if (const auto* s = std::get_if<SphereShape>(&r.shape)) {
    o["sphere"] = ojson{{"center", vec(s->center)}, {"radius", s->radius}};
  } else {
    o["ids"] = std::get<IdList>(r.shape).ids;
  }
  o["target"] = r.target == SelectTarget::Nodes ? "nodes" : "elements";
  return o;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("<root>: malformed JSON: ") + e.what());
  }
  return parse_root(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string echo_config(const RunConfig& rc) {
  ojson root;
  root["schema_version"] = rc.schema_version;

  const auto& d = rc.domain;
  ojson mask = ojson::array();
  for (const auto& m : d.mask) {
    ojson e;
    e["op"] = m.op == CsgOp::Add ? "add" : "subtract";
    if (const auto* b = std::get_if<BoxShape>(&m.shape)) {
      e["box"] = echo_box(*b);
    } else {
      const auto& c = std::get<CylinderShape>(m.shape);
      e["cylinder"] = ojson{{"axis", axis_name(c.axis)},
                            {"center", ojson::array({c.center[0], c.center[1]})},
                            {"radius", c.radius},
                            {"lo", c.lo},
                            {"hi", c.hi}};
    }
    mask.push_back(e);
  }
  root["domain"] = ojson{{"dims", ojson::array({d.nx, d.ny, d.nz})},
                         {"h", d.h},
                         {"origin", vec(d.origin)},
                         {"start_full", d.start_full},
                         {"mask", mask}};
  root["material"] = ojson{{"E", rc.material.E}, {"nu", rc.material.nu}, {"rho", rc.material.rho}};

  ojson cases = ojson::array();
  for (const auto& lc : rc.load_cases) {
    ojson sup = ojson::array(), loads = ojson::array();
    for (const auto& s : lc.dirichlet)
      sup.push_back(ojson{{"region", echo_region(s.region)},
                          {"fixed", ojson::array({s.fixed[0], s.fixed[1], s.fixed[2]})}});
    for (const auto& l : lc.loads)
      loads.push_back(ojson{{"region", echo_region(l.region)},
                            {"force", vec(l.force)},
                            {"distribution", l.distribution == LoadDistribution::Total ? "total" : "per_node"}});
    cases.push_back(ojson{{"id", lc.id}, {"supports", sup}, {"loads", loads}});
  }
  root["load_cases"] = cases;

  ojson cons = ojson::array();
  for (const auto& c : rc.constraints)
    cons.push_back(ojson{{"id", c.id},
                         {"kind", to_string(c.kind)},
                         {"alpha", c.alpha},
                         {"sense", to_string(c.sense)},
                         {"soft", c.soft},
                         {"load_case", c.load_case},
                         {"p", c.p},
                         {"mode", c.mode},
                         {"allow_infeasible_start", c.allow_infeasible_start}});
  root["constraints"] = cons;

  if (rc.casting) {
    const auto& c = *rc.casting;
    root["casting"] = ojson{{"axis", axis_name(c.axis)},
                            {"direction", c.positive ? "+" : "-"},
                            {"two_sided", c.two_sided},
                            {"parting_plane", c.parting_plane}};
  } else {
    root["casting"] = nullptr;
  }

  const auto& op = rc.optimizer;
  root["optimizer"] = ojson{{"mu0", op.mu0},
                            {"gamma0", op.gamma0},
                            {"varsigma", op.varsigma},
                            {"eta", op.eta},
                            {"dv0", op.dv0},
                            {"dv_min", op.dv_min},
                            {"dv_growth", op.dv_growth},
                            {"growth_after", op.growth_after},
                            {"feasibility_tol", op.feasibility_tol},
                            {"max_iterations", op.max_iterations},
                            {"inner", ojson{{"max_iterations", op.inner.max_iterations},
                                            {"compliance_tol", op.inner.compliance_tol},
                                            {"topology_tol", op.inner.topology_tol}}}};
  root["solver"] = ojson{{"tol", rc.solver.tol},
                         {"max_iterations", rc.solver.max_iters},
                         {"deflation", rc.solver.deflation},
                         {"block", rc.solver.block},
                         {"threads", rc.solver.threads}};
  root["eigen"] = ojson{{"count", rc.eigen.count},
                        {"tol", rc.eigen.tol},
                        {"max_iterations", rc.eigen.max_iterations},
                        {"extra_vectors", rc.eigen.extra_vectors},
                        {"seed", rc.eigen.seed}};
  root["output"] = ojson{{"directory", rc.output.directory},
                         {"snapshots", to_string(rc.output.snapshots)},
                         {"full_domain_vtk", rc.output.full_domain_vtk},
                         {"surface", rc.output.surface}};
  return root.dump(2) + "\n";
}

Problem make_problem(const RunConfig& rc) {
  Problem p;
  p.domain = Domain::build(rc.domain);
  p.material = rc.material;
  p.load_cases = rc.load_cases;
  p.constraints = rc.constraints;
  p.solver = rc.solver;
  p.eigen = rc.eigen;
  validate_problem(p);
  for (const auto& lc : p.load_cases) assemble_force(p.domain, lc);
  if (rc.casting) validate_casting(p.domain, *rc.casting);
  return p;
}

}  // namespace atls
