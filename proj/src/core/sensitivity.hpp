#pragma once

#include <span>
#include <vector>

#include "eigen_buckling.hpp"
#include "fea.hpp"

namespace atls {

// Per-element scalar over the whole grid. Elements outside the design
// domain hold 0.
using ScalarField = std::vector<double>;

// 4/(1+nu) sigma:eps - (1-3nu)/(1-nu^2) tr(sigma) tr(eps)
double topological_energy(const Vec6& stress, const Vec6& strain, double nu);

ScalarField von_mises_field(const StiffnessOperator& op, std::span<const double> u);

// Centroid topological sensitivity of compliance.
ScalarField compliance_sensitivity(const StiffnessOperator& op, std::span<const double> u);

// (sum_e w_e vm_e^p)^(1/p) with w_e = occupancy_e / sum occupancy over the design domain.
double pnorm_stress(const StiffnessOperator& op, std::span<const double> u, int p);

// d sigma_PN / d u (zero on constrained DOFs). Throws PreconditionViolated
// when sigma_PN vanishes or p is not an even integer >= 2.
std::vector<double> pnorm_stress_gradient(const StiffnessOperator& op, std::span<const double> u, int p);

// Solves K adj = d sigma_PN / d u.
SolveResult stress_adjoint(const StiffnessOperator& op, std::span<const double> u, int p,
                           const SolverOptions& solver, const DeflationSpace* deflation = nullptr,
                           std::span<const double> x0 = {});

// Primal stress paired with the adjoint strain in the topological energy form.
ScalarField stress_sensitivity(const StiffnessOperator& op, std::span<const double> u,
                               std::span<const double> adjoint);

// sigma:eps - omega^2 rho |u|^2 for an M-normalized mode; |u| is sampled at
// the centroid. Void elements have no mass, so only the strain term remains.
ScalarField eigen_sensitivity(const StiffnessOperator& op, std::span<const double> mode, double omega2);

// u^T K_e u - lambda u^T Ksigma_e u.
ScalarField buckling_sensitivity(const StiffnessOperator& op, const GeometricStiffnessOperator& geometric,
                                 std::span<const double> mode, double lambda);

}  // namespace atls
