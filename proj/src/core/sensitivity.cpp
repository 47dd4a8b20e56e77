#include "sensitivity.hpp"

#include <cmath>

#include "error.hpp"

namespace atls {

namespace {

void check_length(const StiffnessOperator& op, std::span<const double> v) {
  if (v.size() != op.size()) throw Error(ErrorCode::DimensionMismatch, "vector length does not match the mesh");
}

// Runs `f(e)` for every design element; each call writes only its own slot.
template <class F>
void for_design(const StiffnessOperator& op, F&& f) {
  const auto& elems = op.design_elements();
  const auto n = std::ptrdiff_t(elems.size());
#pragma omp parallel for schedule(static) num_threads(op.threads()) if (op.threads() > 1)
  for (std::ptrdiff_t t = 0; t < n; ++t) f(elems[std::size_t(t)]);
}

// sigma^T P sigma = von Mises squared.
Vec6 von_mises_projection(const Vec6& s) {
  Vec6 r;
  r(0) = s(0) - 0.5 * (s(1) + s(2));
  r(1) = s(1) - 0.5 * (s(0) + s(2));
  r(2) = s(2) - 0.5 * (s(0) + s(1));
  r(3) = 3.0 * s(3);
  r(4) = 3.0 * s(4);
  r(5) = 3.0 * s(5);
  return r;
}

void check_exponent(int p) {
  if (p < 2 || p % 2 != 0) throw Error(ErrorCode::PreconditionViolated, "p-norm exponent must be an even integer >= 2");
}

double occupancy_sum(const StiffnessOperator& op) {
  double s = 0.0;
  for (int e : op.design_elements()) s += op.topology().occupancy(e);
  return s;
}

}  // namespace

double topological_energy(const Vec6& stress, const Vec6& strain, double nu) {
  return 4.0 / (1.0 + nu) * double_contraction(stress, strain) -
         (1.0 - 3.0 * nu) / (1.0 - nu * nu) * trace(stress) * trace(strain);
}

ScalarField von_mises_field(const StiffnessOperator& op, std::span<const double> u) {
  check_length(op, u);
  ScalarField f(op.domain().element_count(), 0.0);
  for_design(op, [&](int e) { f[std::size_t(e)] = element_state(op, u, e).von_mises; });
  return f;
}

ScalarField compliance_sensitivity(const StiffnessOperator& op, std::span<const double> u) {
  check_length(op, u);
  const double nu = op.material().nu;
  ScalarField f(op.domain().element_count(), 0.0);
  for_design(op, [&](int e) {
    const auto s = element_state(op, u, e);
    f[std::size_t(e)] = topological_energy(s.stress, s.strain, nu);
  });
  return f;
}

double pnorm_stress(const StiffnessOperator& op, std::span<const double> u, int p) {
  check_exponent(p);
  check_length(op, u);
  const double total = occupancy_sum(op);
  // Scale by the peak before powering to keep vm^p in range.
  const auto vm = von_mises_field(op, u);
  double peak = 0.0;
  for (int e : op.design_elements()) peak = std::max(peak, vm[std::size_t(e)]);
  if (peak == 0.0) return 0.0;
  double acc = 0.0;
  for (int e : op.design_elements())
    acc += op.topology().occupancy(e) / total * std::pow(vm[std::size_t(e)] / peak, p);
  return peak * std::pow(acc, 1.0 / p);
}

std::vector<double> pnorm_stress_gradient(const StiffnessOperator& op, std::span<const double> u, int p) {
  const double pn = pnorm_stress(op, u, p);
  if (!(pn > 0.0)) throw Error(ErrorCode::PreconditionViolated, "p-norm stress is zero; its gradient is undefined");
  const double total = occupancy_sum(op);
  const auto& mat = op.material();
  const StrainDisplacement B0 = strain_displacement(op.domain().h(), 0.0, 0.0, 0.0);
  std::vector<double> g(op.size(), 0.0);
  // d pn = pn^(1-p) sum_e w_e vm_e^(p-2) (P sigma_e)^T C_e B0 du_e
  for (int e : op.design_elements()) {
    const auto s = element_state(op, u, e);
    const double occ = op.topology().occupancy(e);
    const double coef = occ / total * std::pow(s.von_mises / pn, p - 2) / pn;
    if (coef == 0.0) continue;
    const Vec24 ge = coef * (B0.transpose() * (elasticity_matrix(mat.E * occ, mat.nu) * von_mises_projection(s.stress)));
    const auto dofs = op.element_dofs(e);
    for (int a = 0; a < 24; ++a) g[std::size_t(dofs[std::size_t(a)])] += ge(a);
  }
  const auto& fixed = op.constrained();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (fixed[i]) g[i] = 0.0;
  return g;
}

SolveResult stress_adjoint(const StiffnessOperator& op, std::span<const double> u, int p, const SolverOptions& solver,
                           const DeflationSpace* deflation, std::span<const double> x0) {
  const auto rhs = pnorm_stress_gradient(op, u, p);
  return solve_static(op, rhs, solver, deflation, x0);
}

ScalarField stress_sensitivity(const StiffnessOperator& op, std::span<const double> u,
                               std::span<const double> adjoint) {
  check_length(op, u);
  check_length(op, adjoint);
  const double nu = op.material().nu;
  const StrainDisplacement B0 = strain_displacement(op.domain().h(), 0.0, 0.0, 0.0);
  ScalarField f(op.domain().element_count(), 0.0);
  for_design(op, [&](int e) {
    const auto s = element_state(op, u, e);
    const Vec6 adj_strain = B0 * op.gather(adjoint, e);
    f[std::size_t(e)] = topological_energy(s.stress, adj_strain, nu);
  });
  return f;
}

ScalarField eigen_sensitivity(const StiffnessOperator& op, std::span<const double> mode, double omega2) {
  check_length(op, mode);
  const double rho = op.material().rho;
  ScalarField f(op.domain().element_count(), 0.0);
  for_design(op, [&](int e) {
    const auto s = element_state(op, mode, e);
    const Vec24 ue = op.gather(mode, e);
    double c[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) c[i] += ue(3 * a + i) / 8.0;
    const double kinetic = op.topology().solid(e) ? omega2 * rho * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) : 0.0;
    f[std::size_t(e)] = double_contraction(s.stress, s.strain) - kinetic;
  });
  return f;
}

ScalarField buckling_sensitivity(const StiffnessOperator& op, const GeometricStiffnessOperator& geometric,
                                 std::span<const double> mode, double lambda) {
  check_length(op, mode);
  ScalarField f(op.domain().element_count(), 0.0);
  if (!std::isfinite(lambda)) return f;
  const Mat24& k0 = op.element_matrix();
  for_design(op, [&](int e) {
    const Vec24 ue = op.gather(mode, e);
    const double ke = op.topology().occupancy(e) * ue.dot(k0 * ue);
    const double kg = ue.dot(geometric.element_matrix(e) * ue);
    f[std::size_t(e)] = ke - lambda * kg;
  });
  return f;
}

}  // namespace atls
