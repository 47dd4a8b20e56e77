#pragma once

#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "auglag.hpp"
#include "level_set.hpp"
#include "voxel_mesh.hpp"

namespace atls {

inline constexpr int kSchemaVersion = 1;

enum class SnapshotCadence { EveryAccepted, Final };
const char* to_string(SnapshotCadence cadence);

struct OutputConfig {
  std::string directory = "atls_out";
  SnapshotCadence snapshots = SnapshotCadence::EveryAccepted;
  bool full_domain_vtk = false;  // also write every grid element, void included
  bool surface = true;           // boundary quads of the final topology as OBJ
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  DomainConfig domain;
  Material material;
  std::vector<LoadCase> load_cases;
  std::vector<ConstraintSpec> constraints;
  std::optional<CastingSpec> casting;
  OptimizerConfig optimizer;
  SolverOptions solver;
  EigenOptions eigen;
  OutputConfig output;
};

// JSON text -> validated RunConfig. SchemaError names the offending path
// (e.g. "constraints[0].alpha"); SemanticError covers value-level rules.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Every field, defaults included, as pretty-printed JSON.
std::string echo_config(const RunConfig& config);

// Builds the domain and checks cross references. Throws SemanticError (or the
// domain's own error codes) when the config cannot be run.
Problem make_problem(const RunConfig& config);

}  // namespace atls
