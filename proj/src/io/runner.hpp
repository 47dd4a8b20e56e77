#pragma once

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"
#include "export.hpp"

namespace atls {

struct RunnerCallbacks {
  std::function<void(const IterationRecord&)> on_iteration;
  std::function<bool()> cancelled;
};

struct RunReport {
  Problem problem;
  RunResult result;
  RunSummary summary;
  std::vector<std::string> written;
};

// Runs the optimizer and writes into config.output.directory:
//   history.csv, summary.json, final.topo, final.vtk
//   final_full.vtk (full_domain_vtk), final_surface.obj (surface)
//   snapshots/step_NNNN.{topo,vtk} for every accepted step (every_accepted)
// history.csv is also written when the run fails part way.
RunReport run_to_directory(const RunConfig& config, const RunnerCallbacks& callbacks = {});

struct BaselineCase {
  std::string id;
  double J0 = 0.0;
  double sigma0 = 0.0;  // p-norm von Mises
  double P0 = 0.0;      // critical buckling factor, NaN when the case compresses nothing
};

struct BaselineReport {
  std::vector<BaselineCase> cases;
  double lambda0 = 0.0;  // fundamental eigenvalue (omega^2)
  std::vector<std::pair<std::string, double>> constraint_q0;
};

// Full-design analyses only.
BaselineReport analyze_baseline(const RunConfig& config);

// Re-exports artifacts from any file the runner writes (.topo, .vtk, .obj,
// .csv, .json) into `out_dir`. Returns the paths written.
std::vector<std::string> export_from(const RunConfig& config, const std::string& source, const std::string& out_dir);

}  // namespace atls
