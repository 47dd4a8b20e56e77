#include "fea.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "error.hpp"

namespace atls {

void Material::validate() const {
  if (!(E > 0.0) || !std::isfinite(E)) throw Error(ErrorCode::BadDimension, "Young's modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw Error(ErrorCode::BadDimension, "Poisson ratio must lie in [0, 0.5)");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorCode::BadDimension, "density must be positive");
}

// ---------------------------------------------------------------------------

Mat6 elasticity_matrix(double E, double nu) {
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Mat6 C = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) C(i, j) = lambda;
    C(i, i) = lambda + 2.0 * mu;
    C(i + 3, i + 3) = mu;
  }
  return C;
}

Eigen::Matrix<double, 3, 8> shape_gradients(double h, double xi, double eta, double zeta) {
  Eigen::Matrix<double, 3, 8> g;
  const double s = 2.0 / h;
  for (int a = 0; a < 8; ++a) {
    const auto& c = kHexCorners[std::size_t(a)];
    const double sx = 2.0 * c[0] - 1.0;
    const double sy = 2.0 * c[1] - 1.0;
    const double sz = 2.0 * c[2] - 1.0;
    g(0, a) = s * 0.125 * sx * (1.0 + sy * eta) * (1.0 + sz * zeta);
    g(1, a) = s * 0.125 * sy * (1.0 + sx * xi) * (1.0 + sz * zeta);
    g(2, a) = s * 0.125 * sz * (1.0 + sx * xi) * (1.0 + sy * eta);
  }
  return g;
}

StrainDisplacement strain_displacement(double h, double xi, double eta, double zeta) {
  const auto g = shape_gradients(h, xi, eta, zeta);
  StrainDisplacement B = StrainDisplacement::Zero();
  for (int a = 0; a < 8; ++a) {
    const double dx = g(0, a), dy = g(1, a), dz = g(2, a);
    const int c = 3 * a;
    B(0, c + 0) = dx;
    B(1, c + 1) = dy;
    B(2, c + 2) = dz;
    B(3, c + 1) = dz;
    B(3, c + 2) = dy;
    B(4, c + 0) = dz;
    B(4, c + 2) = dx;
    B(5, c + 0) = dy;
    B(5, c + 1) = dx;
  }
  return B;
}

Mat24 hex_element_stiffness(const Material& material, double h) {
  const Mat6 C = elasticity_matrix(material.E, material.nu);
  const double gp = 1.0 / std::sqrt(3.0);
  const double det_j = h * h * h / 8.0;
  Mat24 k = Mat24::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int l = 0; l < 2; ++l) {
        const auto B = strain_displacement(h, (2 * i - 1) * gp, (2 * j - 1) * gp, (2 * l - 1) * gp);
        k.noalias() += B.transpose() * C * B * det_j;
      }
    }
  }
  return 0.5 * (k + k.transpose());
}

double double_contraction(const Vec6& stress, const Vec6& strain) { return stress.dot(strain); }

double trace(const Vec6& tensor) { return tensor(0) + tensor(1) + tensor(2); }

double von_mises(const Vec6& s) {
  const double a = s(0) - s(1), b = s(1) - s(2), c = s(2) - s(0);
  const double q = 0.5 * (a * a + b * b + c * c) + 3.0 * (s(3) * s(3) + s(4) * s(4) + s(5) * s(5));
  return std::sqrt(std::max(q, 0.0));
}

// ---------------------------------------------------------------------------

StiffnessOperator::StiffnessOperator(const Domain& domain, Topology topology, const Material& material,
                                     std::vector<std::uint8_t> constrained, int threads)
    : domain_(&domain),
      topology_(std::move(topology)),
      material_(material),
      constrained_(std::move(constrained)),
      k0_(hex_element_stiffness(material, domain.h())),
      threads_(std::max(1, threads)) {
  if (constrained_.size() != domain.dof_count()) {
    throw Error(ErrorCode::DimensionMismatch, "constraint mask length does not match DOF count");
  }
  if (topology_.solid_flags().size() != domain.element_count()) {
    throw Error(ErrorCode::DimensionMismatch, "topology does not match the domain");
  }
  const int sx = domain.nx() + 1;
  const int sxy = sx * (domain.ny() + 1);
  for (int a = 0; a < 8; ++a) {
    const auto& c = kHexCorners[std::size_t(a)];
    corner_offset_[std::size_t(a)] = c[0] + sx * c[1] + sxy * c[2];
  }
  // Elements outside D are not part of the structure.
  for (std::size_t e = 0; e < domain.element_count(); ++e) {
    if (!domain.in_design(int(e))) continue;
    elements_.push_back(int(e));
    const auto [i, j, k] = domain.element_ijk(int(e));
    colors_[std::size_t((i & 1) | ((j & 1) << 1) | ((k & 1) << 2))].push_back(int(e));
  }
}

std::array<int, 24> StiffnessOperator::element_dofs(int e) const {
  const auto [i, j, k] = domain_->element_ijk(e);
  const int n0 = domain_->node_index(i, j, k);
  std::array<int, 24> dofs{};
  for (int a = 0; a < 8; ++a) {
    const int n = n0 + corner_offset_[std::size_t(a)];
    for (int d = 0; d < 3; ++d) dofs[std::size_t(3 * a + d)] = 3 * n + d;
  }
  return dofs;
}

Vec24 StiffnessOperator::gather(std::span<const double> x, int e) const {
  const auto dofs = element_dofs(e);
  Vec24 v;
  for (int i = 0; i < 24; ++i) v(i) = x[std::size_t(dofs[std::size_t(i)])];
  return v;
}

template <class Kernel>
void StiffnessOperator::for_each_element(Kernel&& kernel) const {
  if (threads_ <= 1) {
    for (int e : elements_) kernel(e);
    return;
  }
  // Elements of one color share no nodes, so scatters do not race.
  for (const auto& color : colors_) {
    const long count = long(color.size());
#pragma omp parallel for num_threads(threads_) schedule(static)
    for (long idx = 0; idx < count; ++idx) kernel(color[std::size_t(idx)]);
  }
}

void StiffnessOperator::apply_impl(std::span<const double> x, std::span<double> y, bool masked) const {
  const std::size_t n = size();
  if (x.size() != n || y.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "vector length does not match DOF count");
  }
  std::vector<double> masked_x;
  const double* xp = x.data();
  if (masked) {
    masked_x.assign(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) {
      if (constrained_[i]) masked_x[i] = 0.0;
    }
    xp = masked_x.data();
  }
  std::fill(y.begin(), y.end(), 0.0);
  double* yp = y.data();
  const int sx = domain_->nx() + 1;
  const int sxy = sx * (domain_->ny() + 1);
  const int nx = domain_->nx(), ny = domain_->ny();

  for_each_element([&](int e) {
    const int i = e % nx;
    const int j = (e / nx) % ny;
    const int k = e / (nx * ny);
    const int n0 = i + sx * j + sxy * k;
    Vec24 ue;
    for (int a = 0; a < 8; ++a) {
      const int base = 3 * (n0 + corner_offset_[std::size_t(a)]);
      ue(3 * a) = xp[base];
      ue(3 * a + 1) = xp[base + 1];
      ue(3 * a + 2) = xp[base + 2];
    }
    Vec24 fe = k0_ * ue;
    fe *= topology_.occupancy(e);
    for (int a = 0; a < 8; ++a) {
      const int base = 3 * (n0 + corner_offset_[std::size_t(a)]);
      yp[base] += fe(3 * a);
      yp[base + 1] += fe(3 * a + 1);
      yp[base + 2] += fe(3 * a + 2);
    }
  });

  if (masked) {
    for (std::size_t i = 0; i < n; ++i) {
      if (constrained_[i]) y[i] = 0.0;
    }
  }
}

void StiffnessOperator::apply(std::span<const double> x, std::span<double> y) const {
  apply_impl(x, y, true);
}

void StiffnessOperator::apply_unconstrained(std::span<const double> x, std::span<double> y) const {
  apply_impl(x, y, false);
}

std::vector<double> StiffnessOperator::diagonal() const {
  std::vector<double> d(size(), 0.0);
  for (int e : elements_) {
    const auto dofs = element_dofs(e);
    const double occ = topology_.occupancy(e);
    for (int i = 0; i < 24; ++i) d[std::size_t(dofs[std::size_t(i)])] += occ * k0_(i, i);
  }
  return d;
}

ElementState element_state(const StiffnessOperator& op, std::span<const double> u, int e) {
  const double h = op.domain().h();
  static thread_local double cached_h = -1.0;
  static thread_local StrainDisplacement B0;
  if (cached_h != h) {
    B0 = strain_displacement(h, 0.0, 0.0, 0.0);
    cached_h = h;
  }
  ElementState s;
  s.strain = B0 * op.gather(u, e);
  const auto& m = op.material();
  s.stress = elasticity_matrix(m.E * op.topology().occupancy(e), m.nu) * s.strain;
  s.von_mises = von_mises(s.stress);
  return s;
}

// ---------------------------------------------------------------------------

DeflationSpace DeflationSpace::build(const Domain& domain, const Topology& topology,
                                     const LinearOperator& op, int block) {
  if (block < 2) throw Error(ErrorCode::BadDimension, "deflation block must be >= 2 elements");
  DeflationSpace ds;
  const std::array<int, 3> cells{domain.nx(), domain.ny(), domain.nz()};
  std::array<int, 3> nb{};
  for (int a = 0; a < 3; ++a) nb[std::size_t(a)] = std::max(1, cells[std::size_t(a)] / block);
  const int block_count = nb[0] * nb[1] * nb[2];
  auto block_coord = [&](int idx, int a) { return std::min(idx / block, nb[std::size_t(a)] - 1); };
  auto block_id = [&](int bi, int bj, int bk) { return bi + nb[0] * (bj + nb[1] * bk); };

  // Each block splits into two agglomerates: nodes of solid elements, and
  // nodes held by void material alone. Their rigid motions are the slow modes
  // of the ersatz-contrast operator; lumping them together is not.
  std::vector<std::uint8_t> solid_node(domain.node_count(), 0);
  for (std::size_t e = 0; e < domain.element_count(); ++e) {
    if (!topology.solid(int(e))) continue;
    for (int n : domain.element_nodes(int(e))) solid_node[std::size_t(n)] = 1;
  }
  const int agglomerates = 2 * block_count;

  const auto& constrained = op.constrained();
  const std::size_t ndof = domain.dof_count();
  ds.node_block_.assign(domain.node_count(), -1);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(agglomerates));
  for (std::size_t n = 0; n < domain.node_count(); ++n) {
    if (!domain.node_active(int(n))) continue;
    const auto [i, j, k] = domain.node_ijk(int(n));
    const int b = block_id(block_coord(i, 0), block_coord(j, 1), block_coord(k, 2));
    const int g = 2 * b + (solid_node[n] ? 0 : 1);
    ds.node_block_[n] = g;
    members[std::size_t(g)].push_back(int(n));
  }

  // Rigid-body modes per agglomerate, orthonormalized over its free DOFs.
  ds.basis_.assign(ndof * 6, 0.0);
  std::vector<std::uint8_t> valid(std::size_t(agglomerates) * 6, 0);
  for (int g = 0; g < agglomerates; ++g) {
    const auto& nodes = members[std::size_t(g)];
    if (nodes.empty()) continue;
    Vec3 center{0, 0, 0};
    for (int n : nodes) {
      const Vec3 p = domain.node_position(n);
      for (int a = 0; a < 3; ++a) center[std::size_t(a)] += p[std::size_t(a)] / double(nodes.size());
    }
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(Eigen::Index(nodes.size() * 3), 6);
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      const Vec3 p = domain.node_position(nodes[r]);
      const double x = (p[0] - center[0]) / domain.h();
      const double y = (p[1] - center[1]) / domain.h();
      const double z = (p[2] - center[2]) / domain.h();
      const Eigen::Index row = Eigen::Index(3 * r);
      V(row + 0, 0) = 1.0;
      V(row + 1, 1) = 1.0;
      V(row + 2, 2) = 1.0;
      // rotations about x, y, z
      V(row + 1, 3) = -z;
      V(row + 2, 3) = y;
      V(row + 0, 4) = z;
      V(row + 2, 4) = -x;
      V(row + 0, 5) = -y;
      V(row + 1, 5) = x;
      for (int a = 0; a < 3; ++a) {
        if (constrained[std::size_t(dof_index(nodes[r], a))]) V.row(row + a).setZero();
      }
    }
    for (int m = 0; m < 6; ++m) {
      const double original = V.col(m).norm();
      for (int q = 0; q < m; ++q) {
        if (valid[std::size_t(6 * g + q)]) V.col(m) -= V.col(q).dot(V.col(m)) * V.col(q);
      }
      const double remaining = V.col(m).norm();
      if (original > 0.0 && remaining > 1e-8 * original) {
        V.col(m) /= remaining;
        valid[std::size_t(6 * g + m)] = 1;
      } else {
        V.col(m).setZero();
      }
    }
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      for (int a = 0; a < 3; ++a) {
        const std::size_t dof = std::size_t(dof_index(nodes[r], a));
        for (int m = 0; m < 6; ++m) ds.basis_[dof * 6 + std::size_t(m)] = V(Eigen::Index(3 * r + std::size_t(a)), m);
      }
    }
  }
  ds.active_columns_ = std::size_t(std::count(valid.begin(), valid.end(), 1));

  // A W, probing all agglomerates of one block parity color and one part at
  // once: same-color blocks are at least one block apart, so their images do
  // not overlap.
  ds.aw_.assign(std::size_t(agglomerates) * 6, {});
  std::vector<double> v(ndof), y(ndof);
  for (int pass = 0; pass < 16; ++pass) {
    const int color = pass / 2, part = pass % 2;
    std::vector<int> probe;
    for (int bk = 0; bk < nb[2]; ++bk) {
      for (int bj = 0; bj < nb[1]; ++bj) {
        for (int bi = 0; bi < nb[0]; ++bi) {
          if (((bi & 1) | ((bj & 1) << 1) | ((bk & 1) << 2)) != color) continue;
          const int g = 2 * block_id(bi, bj, bk) + part;
          if (!members[std::size_t(g)].empty()) probe.push_back(g);
        }
      }
    }
    if (probe.empty()) continue;
    for (int m = 0; m < 6; ++m) {
      std::fill(v.begin(), v.end(), 0.0);
      bool any = false;
      for (int g : probe) {
        if (!valid[std::size_t(6 * g + m)]) continue;
        any = true;
        for (int n : members[std::size_t(g)]) {
          for (int a = 0; a < 3; ++a) {
            const std::size_t dof = std::size_t(dof_index(n, a));
            v[dof] = ds.basis_[dof * 6 + std::size_t(m)];
          }
        }
      }
      if (!any) continue;
      op.apply(v, y);
      for (int g : probe) {
        if (!valid[std::size_t(6 * g + m)]) continue;
        const int b = g / 2;
        const int bi = b % nb[0], bj = (b / nb[0]) % nb[1], bk = b / (nb[0] * nb[1]);
        // Node range of the block, widened by one node layer.
        auto range = [&](int bc, int a) {
          const int lo = bc * block;
          const int hi = (bc == nb[std::size_t(a)] - 1) ? cells[std::size_t(a)] : (bc + 1) * block - 1;
          return std::pair<int, int>{std::max(0, lo - 1), std::min(cells[std::size_t(a)], hi + 1)};
        };
        const auto [i0, i1] = range(bi, 0);
        const auto [j0, j1] = range(bj, 1);
        const auto [k0, k1] = range(bk, 2);
        auto& col = ds.aw_[std::size_t(6 * g + m)];
        for (int k = k0; k <= k1; ++k) {
          for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) {
              const int n = domain.node_index(i, j, k);
              for (int a = 0; a < 3; ++a) {
                const int dof = dof_index(n, a);
                const double val = y[std::size_t(dof)];
                if (val != 0.0) {
                  col.index.push_back(dof);
                  col.value.push_back(val);
                }
              }
            }
          }
        }
      }
    }
  }

  // Coarse matrix W^T A W over the valid columns. Sparse: agglomerates only
  // couple to their neighbours.
  ds.columns_ = std::size_t(agglomerates) * 6;
  ds.compact_.assign(ds.columns_, -1);
  int rows = 0;
  for (std::size_t c = 0; c < ds.columns_; ++c)
    if (valid[c]) ds.compact_[c] = rows++;
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t c = 0; c < ds.columns_; ++c) {
    if (!valid[c]) continue;
    const auto& col = ds.aw_[c];
    for (std::size_t t = 0; t < col.index.size(); ++t) {
      const int dof = col.index[t];
      const int owner = ds.node_block_[std::size_t(dof / 3)];
      if (owner < 0) continue;
      for (int m = 0; m < 6; ++m) {
        const int r = ds.compact_[std::size_t(6 * owner + m)];
        const double w = ds.basis_[std::size_t(dof) * 6 + std::size_t(m)];
        if (r >= 0 && w != 0.0) entries.emplace_back(r, ds.compact_[c], 0.5 * w * col.value[t]);
      }
    }
  }
  if (rows == 0) return ds;
  Eigen::SparseMatrix<double> E(rows, rows), Et;
  E.setFromTriplets(entries.begin(), entries.end());
  Et = E.transpose();
  E += Et;  // symmetrized (each half carries 0.5)
  auto factor = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(E);
  if (factor->info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "coarse deflation matrix is singular");
  ds.factor_ = std::move(factor);
  return ds;
}

Eigen::VectorXd DeflationSpace::restrict(std::span<const double> r) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(columns_));
  for (std::size_t dof = 0; dof < r.size(); ++dof) {
    const int owner = node_block_[dof / 3];
    if (owner < 0 || r[dof] == 0.0) continue;
    const double* w = &basis_[dof * 6];
    for (int m = 0; m < 6; ++m) out(6 * owner + m) += w[m] * r[dof];
  }
  return out;
}

Eigen::VectorXd DeflationSpace::restrict_operator(std::span<const double> z) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(columns_));
  for (std::size_t c = 0; c < aw_.size(); ++c) {
    const auto& col = aw_[c];
    double s = 0.0;
    for (std::size_t t = 0; t < col.index.size(); ++t) s += col.value[t] * z[std::size_t(col.index[t])];
    out(Eigen::Index(c)) = s;
  }
  return out;
}

void DeflationSpace::prolong_add(const Eigen::VectorXd& c, std::span<double> x, double scale) const {
  for (std::size_t dof = 0; dof < x.size(); ++dof) {
    const int owner = node_block_[dof / 3];
    if (owner < 0) continue;
    const double* w = &basis_[dof * 6];
    double s = 0.0;
    for (int m = 0; m < 6; ++m) s += w[m] * c(6 * owner + m);
    x[dof] += scale * s;
  }
}

void DeflationSpace::prolong_operator_add(const Eigen::VectorXd& c, std::span<double> y, double scale) const {
  for (std::size_t col = 0; col < aw_.size(); ++col) {
    const double w = scale * c(Eigen::Index(col));
    if (w == 0.0) continue;
    const auto& aw = aw_[col];
    for (std::size_t t = 0; t < aw.index.size(); ++t) y[std::size_t(aw.index[t])] += w * aw.value[t];
  }
}

Eigen::VectorXd DeflationSpace::coarse_solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd packed(factor_->rows());
  for (std::size_t c = 0; c < columns_; ++c)
    if (compact_[c] >= 0) packed(compact_[c]) = rhs(Eigen::Index(c));
  const Eigen::VectorXd solved = factor_->solve(packed);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(columns_));
  for (std::size_t c = 0; c < columns_; ++c)
    if (compact_[c] >= 0) out(Eigen::Index(c)) = solved(compact_[c]);
  return out;
}

std::vector<double> DeflationSpace::basis_vector(std::size_t col) const {
  const std::size_t ndof = node_block_.size() * 3;
  std::vector<double> v(ndof, 0.0);
  const int owner = int(col / 6);
  const std::size_t m = col % 6;
  for (std::size_t dof = 0; dof < ndof; ++dof) {
    if (node_block_[dof / 3] == owner) v[dof] = basis_[dof * 6 + m];
  }
  return v;
}

// ---------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

int default_max_iterations(std::size_t dofs) {
  return std::max(50, int(std::ceil(10.0 * std::sqrt(double(dofs)))));
}

SolveResult solve_pcg(const LinearOperator& op, std::span<const double> b_in, double tol, int max_iters,
                      const DeflationSpace* deflation, std::span<const double> x0) {
  const std::size_t n = op.size();
  if (b_in.size() != n || (!x0.empty() && x0.size() != n)) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side length does not match the operator");
  }
  const auto& fixed = op.constrained();
  std::vector<double> b(b_in.begin(), b_in.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) b[i] = 0.0;
    if (!std::isfinite(b[i])) throw Error(ErrorCode::PreconditionViolated, "right-hand side is not finite");
  }
  SolveResult result;
  result.x.assign(n, 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) return result;
  if (max_iters <= 0) max_iters = default_max_iterations(n);

  const auto diag = op.diagonal();
  std::vector<double> inv_diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) continue;
    if (!(diag[i] > 0.0)) {
      throw Error(ErrorCode::SingularSystem, "stiffness diagonal vanishes on a free DOF");
    }
    inv_diag[i] = 1.0 / diag[i];
  }
  const bool deflate = deflation != nullptr && !deflation->empty();

  auto& x = result.x;
  if (!x0.empty()) {
    for (std::size_t i = 0; i < n; ++i) x[i] = fixed[i] ? 0.0 : x0[i];
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  auto residual = [&] {
    op.apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  };
  residual();
  if (deflate) {
    deflation->prolong_add(deflation->coarse_solve(deflation->restrict(r)), x);
    residual();
  }
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  };
  precondition();
  p = z;
  if (deflate) deflation->prolong_add(deflation->coarse_solve(deflation->restrict_operator(z)), p, -1.0);
  double rz = dot(r, z);
  double rel = norm(r) / bnorm;

  int it = 0;
  while (rel > tol && it < max_iters) {
    op.apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    if (deflate) {
      // Rounding lets W^T r drift from zero; once it does the recursion
      // diverges on high-contrast topologies. Push it back every step.
      const Eigen::VectorXd c = deflation->coarse_solve(deflation->restrict(r));
      deflation->prolong_add(c, x);
      deflation->prolong_operator_add(c, r, -1.0);
    }
    ++it;
    rel = norm(r) / bnorm;
    if (rel <= tol) break;
    precondition();
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = beta * p[i] + z[i];
    if (deflate) deflation->prolong_add(deflation->coarse_solve(deflation->restrict_operator(z)), p, -1.0);
  }
  residual();
  result.iterations = it;
  result.residual = norm(r) / bnorm;
  if (result.residual > tol && rel > tol) {
    std::ostringstream msg;
    msg << "conjugate gradients did not converge in " << it << " iterations (relative residual "
        << result.residual << ", tolerance " << tol << ")";
    throw ConvergenceError(msg.str(), result.residual, it);
  }
  return result;
}

SolveResult solve_static(const StiffnessOperator& op, std::span<const double> f, const SolverOptions& options,
                         const DeflationSpace* deflation, std::span<const double> x0) {
  if (!(options.tol > 0.0 && options.tol <= 1e-2)) {
    throw Error(ErrorCode::PreconditionViolated, "solver tolerance must lie in (0, 1e-2]");
  }
  return solve_pcg(op, f, options.tol, options.max_iters, deflation, x0);
}

}  // namespace atls
