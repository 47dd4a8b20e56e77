#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "auglag.hpp"
#include "level_set.hpp"
#include "voxel_mesh.hpp"

namespace atls {

// Shortest text that parses back to the same double.
std::string format_double(double x);

using FieldSet = std::vector<std::pair<std::string, ScalarField>>;

// occupancy, von_mises, T_compliance, T_stress, T_eigen, T_buckling, T_combined.
// Sensitivity arrays without a matching constraint are zero.
FieldSet snapshot_fields(const Problem& problem, const Evaluation& evaluation, const CombinedLevelSet& level_set);

// Legacy ASCII unstructured grid of hexahedra. Solid cells only unless
// `full_domain`, which writes every grid element. An element_id array maps
// cells back to the grid. Throws IoError.
void export_vtk(const Domain& domain, const Topology& topology, const FieldSet& fields, const std::string& path,
                bool full_domain = false);

struct VtkGrid {
  std::array<int, 3> dims{};
  double h = 0.0;
  Vec3 origin{};
  bool full_domain = false;
  std::vector<Vec3> points;
  std::vector<std::array<int, 8>> cells;
  std::vector<int> element_ids;
  std::map<std::string, std::vector<double>> cell_data;
};

// Reads files produced by export_vtk.
VtkGrid read_vtk(const std::string& path);

// Solid elements of a grid read back from export_vtk: every cell of a
// solid-only file, cells with occupancy 1 of a full-domain file.
Topology topology_from_vtk(const Domain& domain, const VtkGrid& grid);

// Boundary quads of the solid voxels, outward oriented, as Wavefront OBJ.
void export_surface(const Domain& domain, const Topology& topology, const std::string& path);

// Voxels enclosed by a surface written by export_surface (ray parity test).
Topology read_surface(const Domain& domain, const std::string& path);

// Columns: k, v, dv, accepted, then per constraint <id>.q_over_q0, <id>.g,
// <id>.mu, <id>.gamma, <id>.hard_violated, then J, inner_iters.
void export_history(const std::vector<IterationRecord>& records, const std::vector<std::string>& constraint_ids,
                    const std::string& path);

struct HistoryTable {
  std::vector<std::string> constraint_ids;
  std::vector<IterationRecord> records;  // q is not stored; only q_over_q0
};
HistoryTable read_history(const std::string& path);

// Topology plus the multiplier state needed to rebuild its combined level set.
struct Snapshot {
  std::array<int, 3> dims{};
  int k = 0;
  Topology topology;
  std::vector<std::string> constraint_ids;
  LagrangianState state;
};

void export_snapshot(const Domain& domain, const Snapshot& snapshot, const std::string& path);
Snapshot read_snapshot(const Domain& domain, const std::string& path);

struct ConstraintSummary {
  std::string id;
  std::string kind;
  bool soft = false;
  double alpha = 1.0;
  double q0 = 0.0;
  double q = 0.0;
  double q_over_q0 = 0.0;
  double g = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  bool active = false;  // |g| <= 1e-3
};

struct RunSummary {
  std::string termination;
  double final_v = 1.0;
  std::size_t solid_count = 0;
  std::size_t design_count = 0;
  double J0 = 0.0;
  double J = 0.0;
  std::vector<ConstraintSummary> constraints;
  double wall_seconds = 0.0;
  int outer_iterations = 0;
  int accepted_steps = 0;
  int rejected_steps = 0;
  int max_consecutive_rejections = 0;
  int inner_iterations_total = 0;
  double inner_iterations_median = 0.0;
  int inner_iterations_max = 0;
  std::string final_snapshot;  // file name relative to the summary
  std::string config_echo;     // JSON text of the defaulted config
};

inline constexpr double kActiveTolerance = 1e-3;

RunSummary summarize(const Problem& problem, const RunResult& result, double wall_seconds);
void export_summary(const RunSummary& summary, const std::string& path);
RunSummary read_summary(const std::string& path);

}  // namespace atls
