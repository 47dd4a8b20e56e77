#pragma once

#include <limits>
#include <span>
#include <vector>

#include "fea.hpp"

namespace atls {

// Lumped (diagonal) mass: rho * h^3 of every solid element split equally over
// its eight nodes. Void elements carry no mass.
class MassOperator : public LinearOperator {
 public:
  explicit MassOperator(const StiffnessOperator& stiffness);

  std::size_t size() const override { return mass_.size(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  std::vector<double> diagonal() const override { return mass_; }
  const std::vector<std::uint8_t>& constrained() const override { return *constrained_; }

  const std::vector<double>& lumped() const { return mass_; }
  double total_mass() const { return total_; }
  // Free DOFs with zero lumped mass (excluded from the modal spectrum).
  std::size_t zero_mass_dofs() const { return zero_mass_dofs_; }

 private:
  std::vector<double> mass_;
  const std::vector<std::uint8_t>* constrained_;
  double total_ = 0.0;
  std::size_t zero_mass_dofs_ = 0;
};

// K_sigma = -sum_e int grad(N)^T sigma_e grad(N), so that K phi = lambda K_sigma phi
// has positive lambda under compression. Only solid elements contribute.
class GeometricStiffnessOperator : public LinearOperator {
 public:
  GeometricStiffnessOperator(const StiffnessOperator& stiffness, std::vector<Vec6> element_stress);

  std::size_t size() const override { return stiffness_->size(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  std::vector<double> diagonal() const override;
  const std::vector<std::uint8_t>& constrained() const override { return stiffness_->constrained(); }

  // Element contribution (24 x 24) including the leading minus sign.
  Mat24 element_matrix(int e) const;
  bool zero() const { return active_.empty(); }

 private:
  const StiffnessOperator* stiffness_;
  std::vector<int> active_;
  std::vector<int> slot_;  // element -> index into kernel_, or -1
  std::vector<Eigen::Matrix<double, 8, 8>> kernel_;  // per active element
};

// Scalar kernel int grad(N_a)^T sigma grad(N_b) over the cube (2x2x2 Gauss).
Eigen::Matrix<double, 8, 8> stress_gradient_kernel(const Vec6& stress, double h);

GeometricStiffnessOperator geometric_stiffness(const StiffnessOperator& stiffness,
                                               std::span<const double> u_ref);

struct EigenOptions {
  int count = 1;
  double tol = 1e-6;
  int max_iterations = 300;
  int extra_vectors = 8;
  unsigned seed = 20240611u;
};

// Ritz block of a finished solve, in the solver's internal pencil. Passing it
// to the next solve on a nearby topology replaces the random start.
struct RitzBlock {
  std::vector<std::vector<double>> vectors;
  std::vector<double> values;
};

struct EigenResult {
  // Ascending. Modal: omega^2. Buckling: load factor (index 0 is P).
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  std::vector<double> residuals;
  int iterations = 0;
  std::size_t zero_mass_dofs = 0;
  // Buckling only: no compressive instability; values[0] is +infinity.
  bool no_positive_factor = false;
  RitzBlock block;
};

inline constexpr double kNoBuckling = std::numeric_limits<double>::infinity();

// Smallest eigenpairs of K u = lambda M u by shift-invert subspace iteration
// with (deflated) CG inner solves. Vectors are M-normalized.
EigenResult solve_modal(const StiffnessOperator& stiffness, const MassOperator& mass,
                        const EigenOptions& options, const SolverOptions& solver = {},
                        const RitzBlock* start = nullptr);

// Smallest positive lambda with K phi = lambda K_sigma phi. Modes are scaled to
// unit max displacement. A stress state without compression yields
// no_positive_factor with values = {+inf}.
EigenResult solve_buckling(const StiffnessOperator& stiffness, const GeometricStiffnessOperator& geometric,
                           const EigenOptions& options, const SolverOptions& solver = {},
                           const RitzBlock* start = nullptr);

}  // namespace atls
