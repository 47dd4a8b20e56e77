#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sensitivity.hpp"
#include "voxel_mesh.hpp"

namespace atls {

// Divides by max |value|; a zero field is returned unchanged.
ScalarField normalize_field(const ScalarField& field);

struct CombinedLevelSet {
  ScalarField values;
  std::vector<std::pair<std::string, double>> provenance;  // (constraint id, weight)
};

// T_L = sum_i w_i * normalize(field_i). Throws AllWeightsZero when no weight
// is strictly positive.
CombinedLevelSet combine(const std::vector<ScalarField>& fields, const std::vector<double>& weights,
                         const std::vector<std::string>& ids);

// Mold pull direction. `two_sided`: halves separate at `parting_plane` (a node
// layer index in [0, n]). Otherwise one half pulls away from the face the
// axis points away from: +axis starts at layer 0, -axis at layer n.
struct CastingSpec {
  Axis axis = Axis::Z;
  bool positive = true;
  bool two_sided = true;
  int parting_plane = 0;
};

void validate_casting(const Domain& domain, const CastingSpec& spec);

// Running minimum along every grid column moving away from the parting plane,
// independently on each side. Only design elements take part.
ScalarField casting_project(const Domain& domain, const ScalarField& field, const CastingSpec& spec);

// Columns (per mold side) whose occupied design cells are not a single run
// touching the parting plane.
std::size_t undercut_violations(const Domain& domain, const Topology& topology, const CastingSpec& spec);

// Number of design elements kept at fraction `target_vf` (rounded, >= 1).
std::size_t target_count(const Domain& domain, double target_vf);

// Keeps the `count` design elements with the largest values (ties: lower
// element index first). With casting, the field is projected first and ties
// prefer cells nearer the parting plane.
Topology extract(const Domain& domain, const ScalarField& levelset, std::size_t count,
                 const std::optional<CastingSpec>& casting = std::nullopt);
Topology extract(const Domain& domain, const ScalarField& levelset, double target_vf,
                 const std::optional<CastingSpec>& casting = std::nullopt);

struct FixedPointOptions {
  int max_iterations = 10;
  double compliance_tol = 0.01;  // relative change between successive iterates
  double topology_tol = 0.001;   // symmetric difference / design count
};

struct FixedPointHooks {
  // Analyzes a topology and returns one compliance per static load case.
  std::function<std::vector<double>(const Topology&)> analyze;
  // Level set for the most recently analyzed topology.
  std::function<ScalarField()> level_set;
};

struct FixedPointResult {
  Topology topology;
  bool converged = false;
  int iterations = 0;
  std::vector<std::vector<double>> compliance;  // per inner iterate
  std::vector<std::size_t> changed;             // symmetric difference to the previous iterate
};

// analyze -> level set -> extract, repeated until successive iterates agree.
// The first extraction moves to the new volume level, so convergence is only
// tested from the second iterate on. The last iterate is the one analyzed most
// recently through `hooks.analyze`.
FixedPointResult fixed_point(const Domain& domain, const Topology& start, std::size_t count,
                             const FixedPointHooks& hooks, const FixedPointOptions& options = {},
                             const std::optional<CastingSpec>& casting = std::nullopt);

}  // namespace atls
