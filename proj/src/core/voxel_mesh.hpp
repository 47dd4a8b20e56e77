#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace atls {

using Vec3 = std::array<double, 3>;

enum class Axis { X = 0, Y = 1, Z = 2 };

// ---------------------------------------------------------------------------
// Geometry description (CSG of axis-aligned primitives tested at centroids)
// ---------------------------------------------------------------------------

struct BoxShape {
  Vec3 min{};
  Vec3 max{};
};

// Cylinder whose axis is parallel to a coordinate axis. `center` holds the
// two in-plane coordinates in cyclic order after the axis (X: y,z; Y: z,x;
// Z: x,y); [lo, hi] bounds the extent along the axis.
struct CylinderShape {
  Axis axis = Axis::Z;
  std::array<double, 2> center{};
  double radius = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

enum class CsgOp { Add, Subtract };

struct MaskPrimitive {
  CsgOp op = CsgOp::Add;
  std::variant<BoxShape, CylinderShape> shape;
};

struct DomainConfig {
  int nx = 1;
  int ny = 1;
  int nz = 1;
  double h = 1.0;
  Vec3 origin{};
  // When true the mask starts with every element in D, otherwise empty.
  bool start_full = true;
  std::vector<MaskPrimitive> mask;
};

bool contains(const BoxShape& box, const Vec3& p, double tol = 0.0);
bool contains(const CylinderShape& cyl, const Vec3& p, double tol = 0.0);

// ---------------------------------------------------------------------------
// Domain: regular hexahedral voxel grid with design mask
// ---------------------------------------------------------------------------

// Local node order of a hexahedron (matches VTK_HEXAHEDRON).
inline constexpr std::array<std::array<int, 3>, 8> kHexCorners = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

class Domain {
 public:
  static Domain build(const DomainConfig& config);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  double h() const { return h_; }
  const Vec3& origin() const { return origin_; }

  std::size_t element_count() const { return std::size_t(nx_) * ny_ * nz_; }
  std::size_t node_count() const { return std::size_t(nx_ + 1) * (ny_ + 1) * (nz_ + 1); }
  std::size_t dof_count() const { return 3 * node_count(); }

  int element_index(int i, int j, int k) const { return i + nx_ * (j + ny_ * k); }
  std::array<int, 3> element_ijk(int e) const;
  int node_index(int i, int j, int k) const { return i + (nx_ + 1) * (j + (ny_ + 1) * k); }
  std::array<int, 3> node_ijk(int n) const;

  Vec3 node_position(int n) const;
  Vec3 element_centroid(int e) const;
  std::array<int, 8> element_nodes(int e) const;

  bool in_design(int e) const { return design_mask_[std::size_t(e)] != 0; }
  const std::vector<std::uint8_t>& design_mask() const { return design_mask_; }
  std::size_t design_count() const { return design_count_; }

  // Nodes touched by at least one design element. DOFs of other nodes carry
  // no material at all and are held fixed by every operator.
  bool node_active(int n) const { return active_nodes_[std::size_t(n)] != 0; }
  const std::vector<std::uint8_t>& active_nodes() const { return active_nodes_; }

 private:
  int nx_ = 0, ny_ = 0, nz_ = 0;
  double h_ = 0.0;
  Vec3 origin_{};
  std::vector<std::uint8_t> design_mask_;
  std::vector<std::uint8_t> active_nodes_;
  std::size_t design_count_ = 0;
};

// ---------------------------------------------------------------------------
// Topology: binary occupancy over the design elements
// ---------------------------------------------------------------------------

// Relative stiffness of void (ersatz) elements.
inline constexpr double kVoidOccupancy = 1e-6;

class Topology {
 public:
  Topology() = default;
  // All design elements solid.
  explicit Topology(const Domain& domain);
  // Explicit solid flags (one per grid element); non-design entries must be 0.
  Topology(const Domain& domain, std::vector<std::uint8_t> solid);

  bool solid(int e) const { return solid_[std::size_t(e)] != 0; }
  double occupancy(int e) const { return solid(e) ? 1.0 : kVoidOccupancy; }
  void set_solid(const Domain& domain, int e, bool value);

  const std::vector<std::uint8_t>& solid_flags() const { return solid_; }
  std::size_t solid_count() const { return solid_count_; }
  std::size_t design_count() const { return design_count_; }
  double volume_fraction() const {
    return design_count_ == 0 ? 0.0 : double(solid_count_) / double(design_count_);
  }

  friend bool operator==(const Topology& a, const Topology& b) { return a.solid_ == b.solid_; }

 private:
  std::vector<std::uint8_t> solid_;
  std::size_t solid_count_ = 0;
  std::size_t design_count_ = 0;
};

double volume_fraction(const Topology& topology);

// Number of elements whose occupancy differs.
std::size_t symmetric_difference(const Topology& a, const Topology& b);

// ---------------------------------------------------------------------------
// Region selection
// ---------------------------------------------------------------------------

struct SphereShape {
  Vec3 center{};
  double radius = 0.0;
};

struct IdList {
  std::vector<int> ids;
};

enum class SelectTarget { Nodes, Elements };

struct RegionSelector {
  std::variant<BoxShape, SphereShape, IdList> shape;
  SelectTarget target = SelectTarget::Nodes;
};

// Sorted, duplicate-free ids. Comparisons are boundary-inclusive with a
// tolerance of h * 1e-9. Element selection tests centroids.
std::vector<int> select(const Domain& domain, const RegionSelector& selector);

// ---------------------------------------------------------------------------
// Load cases
// ---------------------------------------------------------------------------

struct DirichletCondition {
  RegionSelector region;
  std::array<bool, 3> fixed{true, true, true};
};

enum class LoadDistribution { Total, PerNode };

struct NodalLoad {
  RegionSelector region;
  Vec3 force{};
  LoadDistribution distribution = LoadDistribution::Total;
};

// Loads inside one case act simultaneously; distinct cases are analysed
// independently.
struct LoadCase {
  std::string id;
  std::vector<DirichletCondition> dirichlet;
  std::vector<NodalLoad> loads;
};

// Per-DOF flag: 1 when the DOF is prescribed zero (Dirichlet or inactive node).
std::vector<std::uint8_t> constrained_dofs(const Domain& domain, const LoadCase& load_case);

// Nodes carrying at least one Dirichlet axis.
std::vector<int> supported_nodes(const Domain& domain, const LoadCase& load_case);

// Throws SingularSystem unless the supports hold at least three
// non-collinear nodes.
void check_supports(const Domain& domain, const LoadCase& load_case);

std::vector<double> assemble_force(const Domain& domain, const LoadCase& load_case);

// DOF numbering: dof = 3 * node + axis.
inline constexpr int dof_index(int node, int axis) { return 3 * node + axis; }

}  // namespace atls
