#include "voxel_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"
#include "log.hpp"

namespace atls {

namespace {

// In-plane coordinate indices for a cylinder axis, in cyclic order.
std::array<int, 2> plane_axes(Axis axis) {
  switch (axis) {
    case Axis::X: return {1, 2};
    case Axis::Y: return {2, 0};
    case Axis::Z: return {0, 1};
  }
  return {0, 1};
}

bool inside(const Vec3& p, const std::variant<BoxShape, CylinderShape>& shape, double tol) {
  return std::visit([&](const auto& s) { return contains(s, p, tol); }, shape);
}

}  // namespace

bool contains(const BoxShape& box, const Vec3& p, double tol) {
  for (int a = 0; a < 3; ++a) {
    if (p[a] < box.min[a] - tol || p[a] > box.max[a] + tol) return false;
  }
  return true;
}

bool contains(const CylinderShape& cyl, const Vec3& p, double tol) {
  const int along = static_cast<int>(cyl.axis);
  if (p[along] < cyl.lo - tol || p[along] > cyl.hi + tol) return false;
  const auto [a, b] = plane_axes(cyl.axis);
  const double da = p[a] - cyl.center[0];
  const double db = p[b] - cyl.center[1];
  const double r = cyl.radius + tol;
  return da * da + db * db <= r * r;
}

Domain Domain::build(const DomainConfig& config) {
  if (config.nx < 1 || config.ny < 1 || config.nz < 1) {
    std::ostringstream msg;
    msg << "grid dimensions must be >= 1, got " << config.nx << "x" << config.ny << "x" << config.nz;
    throw Error(ErrorCode::BadDimension, msg.str());
  }
  if (!(config.h > 0.0) || !std::isfinite(config.h)) {
    throw Error(ErrorCode::BadDimension, "element edge length h must be positive");
  }

  Domain d;
  d.nx_ = config.nx;
  d.ny_ = config.ny;
  d.nz_ = config.nz;
  d.h_ = config.h;
  d.origin_ = config.origin;

  const double tol = config.h * 1e-9;
  d.design_mask_.assign(d.element_count(), config.start_full ? 1 : 0);
  for (std::size_t e = 0; e < d.element_count(); ++e) {
    const Vec3 c = d.element_centroid(int(e));
    for (const auto& prim : config.mask) {
      if (inside(c, prim.shape, tol)) d.design_mask_[e] = prim.op == CsgOp::Add ? 1 : 0;
    }
  }
  d.design_count_ = std::size_t(std::count(d.design_mask_.begin(), d.design_mask_.end(), 1));
  if (d.design_count_ == 0) {
    throw Error(ErrorCode::EmptyDomain, "no element survives the design mask");
  }

  d.active_nodes_.assign(d.node_count(), 0);
  for (std::size_t e = 0; e < d.element_count(); ++e) {
    if (!d.design_mask_[e]) continue;
    for (int n : d.element_nodes(int(e))) d.active_nodes_[std::size_t(n)] = 1;
  }
  return d;
}

std::array<int, 3> Domain::element_ijk(int e) const {
  const int i = e % nx_;
  const int j = (e / nx_) % ny_;
  const int k = e / (nx_ * ny_);
  return {i, j, k};
}

std::array<int, 3> Domain::node_ijk(int n) const {
  const int i = n % (nx_ + 1);
  const int j = (n / (nx_ + 1)) % (ny_ + 1);
  const int k = n / ((nx_ + 1) * (ny_ + 1));
  return {i, j, k};
}

Vec3 Domain::node_position(int n) const {
  const auto [i, j, k] = node_ijk(n);
  return {origin_[0] + h_ * i, origin_[1] + h_ * j, origin_[2] + h_ * k};
}

Vec3 Domain::element_centroid(int e) const {
  const auto [i, j, k] = element_ijk(e);
  return {origin_[0] + h_ * (i + 0.5), origin_[1] + h_ * (j + 0.5), origin_[2] + h_ * (k + 0.5)};
}

std::array<int, 8> Domain::element_nodes(int e) const {
  const auto [i, j, k] = element_ijk(e);
  std::array<int, 8> nodes{};
  for (int a = 0; a < 8; ++a) {
    const auto& c = kHexCorners[std::size_t(a)];
    nodes[std::size_t(a)] = node_index(i + c[0], j + c[1], k + c[2]);
  }
  return nodes;
}

// ---------------------------------------------------------------------------

Topology::Topology(const Domain& domain)
    : solid_(domain.design_mask()),
      solid_count_(domain.design_count()),
      design_count_(domain.design_count()) {}

Topology::Topology(const Domain& domain, std::vector<std::uint8_t> solid)
    : solid_(std::move(solid)), design_count_(domain.design_count()) {
  if (solid_.size() != domain.element_count()) {
    throw Error(ErrorCode::DimensionMismatch, "topology size does not match the element count");
  }
  for (std::size_t e = 0; e < solid_.size(); ++e) {
    if (solid_[e] && !domain.in_design(int(e))) {
      throw Error(ErrorCode::PreconditionViolated, "element outside the design domain marked solid");
    }
    solid_[e] = solid_[e] ? 1 : 0;
    solid_count_ += solid_[e];
  }
}

void Topology::set_solid(const Domain& domain, int e, bool value) {
  if (e < 0 || std::size_t(e) >= solid_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "element index out of range");
  }
  if (value && !domain.in_design(e)) {
    throw Error(ErrorCode::PreconditionViolated, "element outside the design domain cannot be solid");
  }
  const std::uint8_t v = value ? 1 : 0;
  if (solid_[std::size_t(e)] == v) return;
  solid_[std::size_t(e)] = v;
  if (value) {
    ++solid_count_;
  } else {
    --solid_count_;
  }
}

double volume_fraction(const Topology& topology) { return topology.volume_fraction(); }

std::size_t symmetric_difference(const Topology& a, const Topology& b) {
  const auto& fa = a.solid_flags();
  const auto& fb = b.solid_flags();
  std::size_t n = 0;
  for (std::size_t e = 0; e < std::min(fa.size(), fb.size()); ++e) n += fa[e] != fb[e];
  return n + (std::max(fa.size(), fb.size()) - std::min(fa.size(), fb.size()));
}

// ---------------------------------------------------------------------------

std::vector<int> select(const Domain& domain, const RegionSelector& selector) {
  const double tol = domain.h() * 1e-9;
  const bool nodes = selector.target == SelectTarget::Nodes;
  const std::size_t count = nodes ? domain.node_count() : domain.element_count();

  std::vector<int> out;
  if (const auto* list = std::get_if<IdList>(&selector.shape)) {
    for (int id : list->ids) {
      if (id >= 0 && std::size_t(id) < count) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  auto position = [&](int id) {
    return nodes ? domain.node_position(id) : domain.element_centroid(id);
  };
  for (std::size_t id = 0; id < count; ++id) {
    const Vec3 p = position(int(id));
    bool hit = false;
    if (const auto* box = std::get_if<BoxShape>(&selector.shape)) {
      hit = contains(*box, p, tol);
    } else if (const auto* sphere = std::get_if<SphereShape>(&selector.shape)) {
      double d2 = 0.0;
      for (int a = 0; a < 3; ++a) d2 += (p[a] - sphere->center[a]) * (p[a] - sphere->center[a]);
      const double r = sphere->radius + tol;
      hit = d2 <= r * r;
    }
    if (hit) out.push_back(int(id));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> constrained_dofs(const Domain& domain, const LoadCase& load_case) {
  std::vector<std::uint8_t> fixed(domain.dof_count(), 0);
  for (std::size_t n = 0; n < domain.node_count(); ++n) {
    if (!domain.node_active(int(n))) {
      for (int a = 0; a < 3; ++a) fixed[std::size_t(dof_index(int(n), a))] = 1;
    }
  }
  for (const auto& bc : load_case.dirichlet) {
    for (int n : select(domain, bc.region)) {
      for (int a = 0; a < 3; ++a) {
        if (bc.fixed[std::size_t(a)]) fixed[std::size_t(dof_index(n, a))] = 1;
      }
    }
  }
  return fixed;
}

std::vector<int> supported_nodes(const Domain& domain, const LoadCase& load_case) {
  std::vector<int> nodes;
  for (const auto& bc : load_case.dirichlet) {
    if (!(bc.fixed[0] || bc.fixed[1] || bc.fixed[2])) continue;
    for (int n : select(domain, bc.region)) {
      if (domain.node_active(n)) nodes.push_back(n);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

void check_supports(const Domain& domain, const LoadCase& load_case) {
  const auto nodes = supported_nodes(domain, load_case);
  bool planar = false;
  if (nodes.size() >= 3) {
    const Vec3 p0 = domain.node_position(nodes[0]);
    // Farthest node from p0, then any node off the p0-p1 line.
    std::size_t far = 1;
    double best = -1.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const Vec3 p = domain.node_position(nodes[i]);
      double d2 = 0.0;
      for (int a = 0; a < 3; ++a) d2 += (p[a] - p0[a]) * (p[a] - p0[a]);
      if (d2 > best) {
        best = d2;
        far = i;
      }
    }
    const Vec3 p1 = domain.node_position(nodes[far]);
    const Vec3 d1{p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]};
    const double h2 = domain.h() * domain.h();
    for (std::size_t i = 1; i < nodes.size() && !planar; ++i) {
      const Vec3 p = domain.node_position(nodes[i]);
      const Vec3 d{p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]};
      const Vec3 c{d1[1] * d[2] - d1[2] * d[1], d1[2] * d[0] - d1[0] * d[2], d1[0] * d[1] - d1[1] * d[0]};
      planar = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] > 1e-12 * h2 * h2;
    }
  }
  if (!planar) {
    throw Error(ErrorCode::SingularSystem,
                "load case '" + load_case.id + "' must fix at least three non-collinear nodes");
  }
}

std::vector<double> assemble_force(const Domain& domain, const LoadCase& load_case) {
  std::vector<double> f(domain.dof_count(), 0.0);
  for (const auto& load : load_case.loads) {
    auto sel = load.region;
    sel.target = SelectTarget::Nodes;
    const auto nodes = select(domain, sel);
    if (nodes.empty()) {
      throw Error(ErrorCode::EmptyLoadRegion, "a load of case '" + load_case.id + "' selects no nodes");
    }
    const double scale =
        load.distribution == LoadDistribution::Total ? 1.0 / double(nodes.size()) : 1.0;
    for (int n : nodes) {
      for (int a = 0; a < 3; ++a) f[std::size_t(dof_index(n, a))] += scale * load.force[std::size_t(a)];
    }
  }

  const auto fixed = constrained_dofs(domain, load_case);
  double dropped = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (fixed[i] && f[i] != 0.0) {
      dropped += std::abs(f[i]);
      f[i] = 0.0;
    }
    any = any || f[i] != 0.0;
  }
  if (dropped > 0.0) {
    std::ostringstream msg;
    msg << "load case '" << load_case.id << "': " << dropped
        << " of applied force falls on constrained DOFs and is ignored";
    if (!any) msg << " (force vector is zero)";
    log_warning(msg.str());
  }
  return f;
}

}  // namespace atls
