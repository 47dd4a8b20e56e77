#include "eigen_buckling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "error.hpp"
#include "log.hpp"

namespace atls {

MassOperator::MassOperator(const StiffnessOperator& stiffness)
    : mass_(stiffness.size(), 0.0), constrained_(&stiffness.constrained()) {
  const auto& domain = stiffness.domain();
  const double h = domain.h();
  const double nodal = stiffness.material().rho * h * h * h / 8.0;
  for (int e : stiffness.design_elements()) {
    if (!stiffness.topology().solid(e)) continue;
    total_ += 8.0 * nodal;
    for (int n : domain.element_nodes(e))
      for (int a = 0; a < 3; ++a) mass_[std::size_t(3 * n + a)] += nodal;
  }
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    if ((*constrained_)[i]) mass_[i] = 0.0;
    else if (mass_[i] == 0.0) ++zero_mass_dofs_;
  }
}

void MassOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != mass_.size() || y.size() != mass_.size())
    throw Error(ErrorCode::DimensionMismatch, "vector length does not match the mass operator");
  for (std::size_t i = 0; i < mass_.size(); ++i) y[i] = mass_[i] * x[i];
}

// ---------------------------------------------------------------------------

Eigen::Matrix<double, 8, 8> stress_gradient_kernel(const Vec6& s, double h) {
  Eigen::Matrix3d sigma;
  sigma << s(0), s(5), s(4),
           s(5), s(1), s(3),
           s(4), s(3), s(2);
  const double g = 1.0 / std::sqrt(3.0);
  const double w = h * h * h / 8.0;
  Eigen::Matrix<double, 8, 8> H = Eigen::Matrix<double, 8, 8>::Zero();
  for (int p = 0; p < 8; ++p) {
    const auto G = shape_gradients(h, (p & 1) ? g : -g, (p & 2) ? g : -g, (p & 4) ? g : -g);
    H.noalias() += w * G.transpose() * sigma * G;
  }
  return 0.5 * (H + H.transpose());
}

GeometricStiffnessOperator::GeometricStiffnessOperator(const StiffnessOperator& stiffness,
                                                       std::vector<Vec6> element_stress)
    : stiffness_(&stiffness) {
  const auto& domain = stiffness.domain();
  if (element_stress.size() != domain.element_count())
    throw Error(ErrorCode::DimensionMismatch, "one stress vector per element is required");
  slot_.assign(domain.element_count(), -1);
  for (int e : stiffness.design_elements()) {
    if (!stiffness.topology().solid(e)) continue;
    if (element_stress[std::size_t(e)].isZero(0.0)) continue;
    slot_[std::size_t(e)] = int(active_.size());
    active_.push_back(e);
    kernel_.push_back(stress_gradient_kernel(element_stress[std::size_t(e)], domain.h()));
  }
}

void GeometricStiffnessOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  if (x.size() != n || y.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "vector length does not match the operator");
  std::fill(y.begin(), y.end(), 0.0);
  const auto& fixed = constrained();
  const auto& domain = stiffness_->domain();
  for (std::size_t t = 0; t < active_.size(); ++t) {
    const auto nodes = domain.element_nodes(active_[t]);
    Eigen::Matrix<double, 8, 3> xe;
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) {
        const auto d = std::size_t(3 * nodes[std::size_t(a)] + i);
        xe(a, i) = fixed[d] ? 0.0 : x[d];
      }
    const Eigen::Matrix<double, 8, 3> ye = kernel_[t] * xe;
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) y[std::size_t(3 * nodes[std::size_t(a)] + i)] -= ye(a, i);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (fixed[i]) y[i] = 0.0;
}

std::vector<double> GeometricStiffnessOperator::diagonal() const {
  std::vector<double> d(size(), 0.0);
  const auto& domain = stiffness_->domain();
  for (std::size_t t = 0; t < active_.size(); ++t) {
    const auto nodes = domain.element_nodes(active_[t]);
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) d[std::size_t(3 * nodes[std::size_t(a)] + i)] -= kernel_[t](a, a);
  }
  return d;
}

Mat24 GeometricStiffnessOperator::element_matrix(int e) const {
  Mat24 m = Mat24::Zero();
  if (e < 0 || std::size_t(e) >= slot_.size() || slot_[std::size_t(e)] < 0) return m;
  const auto& H = kernel_[std::size_t(slot_[std::size_t(e)])];
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      for (int i = 0; i < 3; ++i) m(3 * a + i, 3 * b + i) = -H(a, b);
  return m;
}

GeometricStiffnessOperator geometric_stiffness(const StiffnessOperator& stiffness,
                                               std::span<const double> u_ref) {
  if (u_ref.size() != stiffness.size())
    throw Error(ErrorCode::DimensionMismatch, "reference displacement length does not match");
  std::vector<Vec6> stress(stiffness.domain().element_count(), Vec6::Zero());
  for (int e : stiffness.design_elements())
    if (stiffness.topology().solid(e)) stress[std::size_t(e)] = element_state(stiffness, u_ref, e).stress;
  return GeometricStiffnessOperator(stiffness, std::move(stress));
}

// ---------------------------------------------------------------------------

namespace {

// K + s M
class ShiftedOperator : public LinearOperator {
 public:
  ShiftedOperator(const StiffnessOperator& k, const MassOperator& m, double shift)
      : k_(k), m_(m), shift_(shift) {}
  std::size_t size() const override { return k_.size(); }
  void apply(std::span<const double> x, std::span<double> y) const override {
    k_.apply(x, y);
    if (shift_ == 0.0) return;
    const auto& mass = m_.lumped();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += shift_ * mass[i] * x[i];
  }
  std::vector<double> diagonal() const override {
    auto d = k_.diagonal();
    const auto& mass = m_.lumped();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += shift_ * mass[i];
    return d;
  }
  const std::vector<std::uint8_t>& constrained() const override { return k_.constrained(); }

 private:
  const StiffnessOperator& k_;
  const MassOperator& m_;
  double shift_;
};

struct Pencil {
  Eigen::VectorXd mu;   // descending
  Eigen::MatrixXd x;    // A-orthonormal columns
  Eigen::MatrixXd ax;   // A x
  Eigen::MatrixXd bx;   // B x
  int iterations = 0;
};

void apply_columns(const LinearOperator& op, const Eigen::MatrixXd& in, Eigen::MatrixXd& out) {
  const auto n = in.rows();
  out.resize(n, in.cols());
  for (Eigen::Index j = 0; j < in.cols(); ++j)
    op.apply(std::span<const double>(in.col(j).data(), std::size_t(n)),
             std::span<double>(out.col(j).data(), std::size_t(n)));
}

double pair_residual(const Pencil& p, Eigen::Index j, double scale) {
  const double ax = p.ax.col(j).norm();
  if (ax == 0.0) return 0.0;
  return (p.bx.col(j) - p.mu(j) * p.ax.col(j)).norm() / (std::max(std::abs(p.mu(j)), scale) * ax);
}

// Largest eigenvalues mu of B x = mu A x with A symmetric positive definite on
// the free DOFs, by block inverse iteration with Rayleigh-Ritz.
// `shift_negative` enables Y = A^-1 B X + c X when negative mu dominate.
Pencil subspace_iteration(const LinearOperator& A, const LinearOperator& B, int want, int block,
                          const EigenOptions& options, const SolverOptions& solver,
                          const DeflationSpace* deflation, bool shift_negative, const RitzBlock* start) {
  const std::size_t n = A.size();
  const auto& fixed = A.constrained();
  const double inner_tol = std::min(solver.tol, 1e-2 * options.tol);
  const int inner_iters = solver.max_iters > 0 ? solver.max_iters : 4 * default_max_iterations(n);

  std::mt19937 rng(options.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd X(Eigen::Index(n), block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (std::size_t i = 0; i < n; ++i) X(Eigen::Index(i), j) = fixed[i] ? 0.0 : dist(rng);

  Pencil out;
  out.mu = Eigen::VectorXd::Zero(block);
  double c = 0.0;
  bool first = true;
  bool usable = start && start->vectors.size() == std::size_t(block) && start->values.size() == std::size_t(block);
  for (std::size_t j = 0; usable && j < start->vectors.size(); ++j) usable = start->vectors[j].size() == n;
  if (usable) {
    // keep two random columns so a mode absent from the old block can enter
    const Eigen::Index keep = std::max<Eigen::Index>(want, block - 2);
    for (Eigen::Index j = 0; j < keep; ++j) {
      for (std::size_t i = 0; i < n; ++i) X(Eigen::Index(i), j) = fixed[i] ? 0.0 : start->vectors[std::size_t(j)][i];
      out.mu(j) = start->values[std::size_t(j)];
    }
    first = false;
    if (shift_negative) {
      const double lo = out.mu.head(keep).minCoeff(), hi = out.mu.head(keep).maxCoeff();
      c = (lo < 0.0 && -lo > hi) ? -lo : 0.0;
    }
  }
  Eigen::MatrixXd Y(Eigen::Index(n), block), BX(Eigen::Index(n), block);
  int nonpositive_streak = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    apply_columns(B, X, BX);
    for (Eigen::Index j = 0; j < block; ++j) {
      std::vector<double> x0;
      if (!first) {
        x0.resize(n);
        for (std::size_t i = 0; i < n; ++i) x0[i] = out.mu(j) * X(Eigen::Index(i), j);
      }
      auto sol = solve_pcg(A, std::span<const double>(BX.col(j).data(), n), inner_tol, inner_iters, deflation,
                           x0);
      for (std::size_t i = 0; i < n; ++i) Y(Eigen::Index(i), j) = sol.x[i] + c * X(Eigen::Index(i), j);
    }
    // Random restart for columns annihilated by B (e.g. B = 0 on their support).
    for (Eigen::Index j = 0; j < block; ++j)
      if (Y.col(j).norm() == 0.0)
        for (std::size_t i = 0; i < n; ++i) Y(Eigen::Index(i), j) = fixed[i] ? 0.0 : dist(rng);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(Eigen::Index(n), block);
    Eigen::MatrixXd AQ, BQ;
    apply_columns(A, Q, AQ);
    apply_columns(B, Q, BQ);
    Eigen::MatrixXd Ab = Q.transpose() * AQ, Bb = Q.transpose() * BQ;
    Ab = 0.5 * (Ab + Ab.transpose()).eval();
    Bb = 0.5 * (Bb + Bb.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Bb, Ab);
    if (ges.info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "Rayleigh-Ritz projection is not positive definite");
    const Eigen::MatrixXd V = ges.eigenvectors().rowwise().reverse();
    out.mu = ges.eigenvalues().reverse();
    out.x = Q * V;
    out.ax = AQ * V;
    out.bx = BQ * V;
    out.iterations = it;
    first = false;

    const double scale = out.mu.cwiseAbs().maxCoeff();
    bool converged = true;
    for (Eigen::Index j = 0; j < want; ++j)
      if (pair_residual(out, j, 1e-8 * scale) > options.tol) converged = false;
    if (converged) return out;

    if (shift_negative) {
      // A spectrum without positive part: the top Ritz value stays at the
      // noise floor (Ritz values bound the true maximum from below, and the
      // shift below drives the block towards it).
      nonpositive_streak = out.mu(0) > 1e-8 * scale ? 0 : nonpositive_streak + 1;
      if (nonpositive_streak >= 10) return out;
      const double lo = out.mu.minCoeff(), hi = out.mu.maxCoeff();
      c = (lo < 0.0 && -lo > hi) ? -lo : 0.0;
    }
    X = out.x;
  }
  double worst = 0.0;
  const double scale = out.mu.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < want; ++j) worst = std::max(worst, pair_residual(out, j, 1e-8 * scale));
  std::ostringstream msg;
  msg << "eigen solver did not converge in " << options.max_iterations << " iterations (residual " << worst
      << ")";
  throw ConvergenceError(msg.str(), worst, options.max_iterations);
}

std::size_t free_dofs(const std::vector<std::uint8_t>& fixed) {
  return std::size_t(std::count(fixed.begin(), fixed.end(), std::uint8_t(0)));
}

bool has_dirichlet(const StiffnessOperator& k) {
  // Constrained DOFs on active nodes come from Dirichlet conditions.
  const auto& fixed = k.constrained();
  const auto& domain = k.domain();
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (fixed[i] && domain.node_active(int(i / 3))) return true;
  return false;
}

RitzBlock ritz_block(const Pencil& p) {
  RitzBlock b;
  for (Eigen::Index j = 0; j < p.x.cols(); ++j) {
    b.vectors.emplace_back(p.x.col(j).data(), p.x.col(j).data() + p.x.rows());
    b.values.push_back(p.mu(j));
  }
  return b;
}

void check_options(const EigenOptions& options) {
  if (options.count < 1 || options.extra_vectors < 0 || !(options.tol > 0.0) || options.max_iterations < 1)
    throw Error(ErrorCode::PreconditionViolated, "invalid eigen solver options");
}

}  // namespace

EigenResult solve_modal(const StiffnessOperator& stiffness, const MassOperator& mass, const EigenOptions& options,
                        const SolverOptions& solver, const RitzBlock* start) {
  check_options(options);
  const std::size_t nfree = free_dofs(stiffness.constrained());
  const std::size_t massive = nfree - mass.zero_mass_dofs();
  if (massive == 0) throw Error(ErrorCode::ZeroMassSubspace, "no free DOF carries mass");
  if (mass.zero_mass_dofs() > 0) {
    std::ostringstream msg;
    msg << mass.zero_mass_dofs() << " free DOF(s) with zero lumped mass excluded from the modal spectrum";
    log_info(msg.str());
  }
  const int want = int(std::min<std::size_t>(std::size_t(options.count), massive));
  const int block = int(std::min<std::size_t>(std::size_t(want + std::max(want, options.extra_vectors)), nfree));

  double shift = 0.0;
  if (!has_dirichlet(stiffness)) {
    // Free-floating: shift by a small fraction of the typical K/M ratio.
    const auto kd = stiffness.diagonal();
    const auto& md = mass.lumped();
    std::vector<double> ratio;
    for (std::size_t i = 0; i < kd.size(); ++i)
      if (md[i] > 0.0) ratio.push_back(kd[i] / md[i]);
    std::nth_element(ratio.begin(), ratio.begin() + std::ptrdiff_t(ratio.size() / 2), ratio.end());
    shift = 1e-4 * ratio[ratio.size() / 2];
  }
  const ShiftedOperator A(stiffness, mass, shift);
  DeflationSpace deflation;
  if (solver.deflation)
    deflation = DeflationSpace::build(stiffness.domain(), stiffness.topology(), A, solver.block);
  const Pencil p = subspace_iteration(A, mass, want, block, options, solver,
                                      solver.deflation ? &deflation : nullptr, false, start);

  EigenResult r;
  r.iterations = p.iterations;
  r.block = ritz_block(p);
  r.zero_mass_dofs = mass.zero_mass_dofs();
  const double scale = p.mu.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < want; ++j) {
    r.values.push_back(1.0 / p.mu(j) - shift);
    r.residuals.push_back(pair_residual(p, j, 1e-8 * scale));
    std::vector<double> v(p.x.col(j).data(), p.x.col(j).data() + p.x.rows());
    const double mnorm = std::sqrt(std::max(dot(v, std::span<const double>(p.bx.col(j).data(), v.size())), 0.0));
    if (mnorm > 0.0)
      for (double& t : v) t /= mnorm;
    r.vectors.push_back(std::move(v));
  }
  return r;
}

EigenResult solve_buckling(const StiffnessOperator& stiffness, const GeometricStiffnessOperator& geometric,
                           const EigenOptions& options, const SolverOptions& solver, const RitzBlock* start) {
  check_options(options);
  EigenResult r;
  const std::size_t nfree = free_dofs(stiffness.constrained());
  if (geometric.zero() || nfree == 0) {
    r.values = {kNoBuckling};
    r.no_positive_factor = true;
    return r;
  }
  const int want = int(std::min<std::size_t>(std::size_t(options.count), nfree));
  const int block = int(std::min<std::size_t>(std::size_t(want + std::max(want, options.extra_vectors)), nfree));
  DeflationSpace deflation;
  if (solver.deflation)
    deflation = DeflationSpace::build(stiffness.domain(), stiffness.topology(), stiffness, solver.block);
  const Pencil p = subspace_iteration(stiffness, geometric, want, block, options, solver,
                                      solver.deflation ? &deflation : nullptr, true, start);
  r.iterations = p.iterations;
  r.block = ritz_block(p);
  const double scale = p.mu.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < want; ++j) {
    if (!(p.mu(j) > 1e-8 * scale)) break;
    r.values.push_back(1.0 / p.mu(j));
    r.residuals.push_back(pair_residual(p, j, 1e-8 * scale));
    std::vector<double> v(p.x.col(j).data(), p.x.col(j).data() + p.x.rows());
    double peak = 0.0;
    for (double t : v)
      if (std::abs(t) > std::abs(peak)) peak = t;
    if (peak != 0.0)
      for (double& t : v) t /= peak;
    r.vectors.push_back(std::move(v));
  }
  if (r.values.empty()) {
    r.values = {kNoBuckling};
    r.no_positive_factor = true;
  }
  return r;
}

}  // namespace atls
