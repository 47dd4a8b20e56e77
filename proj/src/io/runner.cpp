#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "error.hpp"
#include "log.hpp"

namespace atls {

namespace fs = std::filesystem;

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + dir.string() + "': " + ec.message());
}

std::vector<std::string> ids_of(const Problem& p) {
  std::vector<std::string> ids;
  for (const auto& c : p.constraints) ids.push_back(c.id);
  return ids;
}

// Writes .topo and .vtk (plus optional full-domain and surface files) for one topology.
void write_topology_set(const RunConfig& config, const Problem& problem, const Evaluation& ev,
                        const LagrangianState& state, int k, const fs::path& stem, bool extras,
                        std::vector<std::string>& written) {
  const auto level_set = build_level_set(problem, ev, state.g, state);
  const auto fields = snapshot_fields(problem, ev, level_set);
  Snapshot snap;
  snap.dims = {problem.domain.nx(), problem.domain.ny(), problem.domain.nz()};
  snap.k = k;
  snap.topology = ev.topology;
  snap.constraint_ids = ids_of(problem);
  snap.state = state;
  const auto base = stem.string();
  export_snapshot(problem.domain, snap, base + ".topo");
  written.push_back(base + ".topo");
  export_vtk(problem.domain, ev.topology, fields, base + ".vtk");
  written.push_back(base + ".vtk");
  if (!extras) return;
  if (config.output.full_domain_vtk) {
    export_vtk(problem.domain, ev.topology, fields, base + "_full.vtk", true);
    written.push_back(base + "_full.vtk");
  }
  if (config.output.surface) {
    export_surface(problem.domain, ev.topology, base + "_surface.obj");
    written.push_back(base + "_surface.obj");
  }
}

std::string step_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%04d", k);
  return buf;
}

// Multiplier state at a topology read from a file without one: baseline q0,
// initial multipliers.
LagrangianState fresh_state(const RunConfig& config, const Problem& problem, const Analyzer& analyzer,
                            const Evaluation& ev) {
  LagrangianState s;
  if (problem.constraints.empty()) return s;
  const auto base = analyzer.evaluate(Topology(problem.domain));
  for (const auto& c : base.constraints) s.q0.push_back(c.q);
  s.mu.assign(s.q0.size(), config.optimizer.mu0);
  s.gamma.assign(s.q0.size(), config.optimizer.gamma0);
  s.g = evaluate_constraints(problem, ev, s.q0);
  s.g_prev = s.g;
  return s;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

RunReport run_to_directory(const RunConfig& config, const RunnerCallbacks& callbacks) {
  RunReport report;
  report.problem = make_problem(config);
  const Problem& problem = report.problem;
  const fs::path dir(config.output.directory);
  make_dir(dir);
  const bool every = config.output.snapshots == SnapshotCadence::EveryAccepted;
  if (every) make_dir(dir / "snapshots");

  std::vector<IterationRecord> history;
  std::vector<double> q0;
  RunCallbacks cb;
  cb.cancelled = callbacks.cancelled;
  cb.on_iteration = [&](const IterationRecord& r, const Evaluation& ev) {
    history.push_back(r);
    if (r.k == 0)
      for (const auto& c : r.constraints) q0.push_back(c.q);
    if (every && r.accepted) {
      LagrangianState s;
      s.q0 = q0;
      for (const auto& c : r.constraints) {
        s.mu.push_back(c.mu);
        s.gamma.push_back(c.gamma);
        s.g.push_back(c.g);
      }
      s.g_prev = s.g;
      write_topology_set(config, problem, ev, s, r.k, dir / "snapshots" / step_name(r.k), false, report.written);
    }
    if (callbacks.on_iteration) callbacks.on_iteration(r);
  };

  const auto start = std::chrono::steady_clock::now();
  const auto ids = ids_of(problem);
  try {
    report.result = run(problem, config.optimizer, config.casting, cb);
  } catch (...) {
    if (!history.empty()) {
      try {
        export_history(history, ids, (dir / "history.csv").string());
        log_warning("run failed; partial history written to '" + (dir / "history.csv").string() + "'");
      } catch (const std::exception&) {
      }
    }
    throw;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto& result = report.result;
  export_history(result.history, ids, (dir / "history.csv").string());
  report.written.push_back((dir / "history.csv").string());
  const int final_k = result.history.empty() ? 0 : [&] {
    int k = 0;
    for (const auto& r : result.history)
      if (r.accepted) k = r.k;
    return k;
  }();
  write_topology_set(config, problem, *result.evaluation, result.state, final_k, dir / "final", true, report.written);

  report.summary = summarize(problem, result, wall);
  report.summary.final_snapshot = "final.topo";
  report.summary.config_echo = echo_config(config);
  export_summary(report.summary, (dir / "summary.json").string());
  report.written.push_back((dir / "summary.json").string());
  return report;
}

BaselineReport analyze_baseline(const RunConfig& config) {
  RunConfig probe = config;
  probe.constraints.clear();
  int p = 6;
  for (const auto& c : config.constraints)
    if (c.kind == ConstraintKind::PNormStress) {
      p = c.p;
      break;
    }
  for (const auto& lc : config.load_cases) {
    if (lc.loads.empty()) continue;
    ConstraintSpec c;
    c.load_case = lc.id;
    c.id = "J0:" + lc.id;
    c.kind = ConstraintKind::Compliance;
    probe.constraints.push_back(c);
    c.id = "sigma0:" + lc.id;
    c.kind = ConstraintKind::PNormStress;
    c.p = p;
    probe.constraints.push_back(c);
    c.id = "P0:" + lc.id;
    c.kind = ConstraintKind::Buckling;
    c.sense = Sense::Lower;
    c.alpha = 0.5;
    probe.constraints.push_back(c);
  }
  ConstraintSpec eig;
  eig.id = "lambda0";
  eig.kind = ConstraintKind::Eigenvalue;
  eig.sense = Sense::Lower;
  eig.alpha = 0.5;
  eig.load_case = config.load_cases.front().id;
  probe.constraints.push_back(eig);

  const Problem problem = make_problem(probe);
  const Problem original = make_problem(config);
  const Analyzer analyzer(problem);
  const auto ev = analyzer.evaluate(Topology(problem.domain));

  BaselineReport out;
  std::size_t i = 0;
  for (const auto& lc : config.load_cases) {
    if (lc.loads.empty()) continue;
    BaselineCase bc;
    bc.id = lc.id;
    bc.J0 = ev.constraints[i++].q;
    bc.sigma0 = ev.constraints[i++].q;
    bc.P0 = ev.constraints[i++].q;
    if (!std::isfinite(bc.P0)) bc.P0 = std::numeric_limits<double>::quiet_NaN();
    out.cases.push_back(bc);
  }
  out.lambda0 = ev.constraints[i].q;

  // configured constraints may use other modes or exponents
  if (!original.constraints.empty()) {
    const Analyzer a(original);
    const auto base = a.evaluate(Topology(original.domain));
    for (std::size_t c = 0; c < original.constraints.size(); ++c)
      out.constraint_q0.emplace_back(original.constraints[c].id, base.constraints[c].q);
  }
  return out;
}

std::vector<std::string> export_from(const RunConfig& config, const std::string& source, const std::string& out_dir) {
  const Problem problem = make_problem(config);
  const fs::path src(source);
  if (!fs::exists(src)) throw Error(ErrorCode::IoError, "no such file '" + source + "'");
  make_dir(out_dir);
  const fs::path stem = fs::path(out_dir) / src.stem();
  std::vector<std::string> written;

  const auto name = src.filename().string();
  if (has_suffix(name, ".csv")) {
    const auto table = read_history(source);
    if (table.constraint_ids != ids_of(problem))
      log_warning("'" + source + "': constraint columns differ from the configured constraints");
    const auto out = stem.string() + ".csv";
    export_history(table.records, table.constraint_ids, out);
    written.push_back(out);
    return written;
  }

  std::optional<Snapshot> snap;
  Topology topology;
  if (has_suffix(name, ".topo")) {
    snap = read_snapshot(problem.domain, source);
    topology = snap->topology;
  } else if (has_suffix(name, ".vtk")) {
    topology = topology_from_vtk(problem.domain, read_vtk(source));
  } else if (has_suffix(name, ".obj")) {
    topology = read_surface(problem.domain, source);
  } else if (has_suffix(name, ".json")) {
    const auto summary = read_summary(source);
    if (summary.final_snapshot.empty()) throw Error(ErrorCode::IoError, "'" + source + "' names no snapshot");
    const auto topo = (src.parent_path() / summary.final_snapshot).string();
    snap = read_snapshot(problem.domain, topo);
    topology = snap->topology;
  } else {
    throw Error(ErrorCode::IoError, "'" + source + "': unrecognised artifact (expected .topo, .vtk, .obj, .csv or .json)");
  }
  if (topology.solid_count() == 0) throw Error(ErrorCode::PreconditionViolated, "'" + source + "' holds no solid element");

  const Analyzer analyzer(problem);
  const auto ev = analyzer.evaluate(topology);
  LagrangianState state;
  if (snap && snap->constraint_ids == ids_of(problem)) {
    state = snap->state;
  } else {
    if (snap) log_warning("'" + source + "': constraint ids differ from the config; using baseline multipliers");
    state = fresh_state(config, problem, analyzer, ev);
  }
  write_topology_set(config, problem, ev, state, snap ? snap->k : 0, stem, true, written);
  return written;
}

}  // namespace atls
