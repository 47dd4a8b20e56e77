#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "voxel_mesh.hpp"

namespace atls {

using Mat24 = Eigen::Matrix<double, 24, 24>;
using Vec24 = Eigen::Matrix<double, 24, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using StrainDisplacement = Eigen::Matrix<double, 6, 24>;

struct Material {
  double E = 2e11;
  double nu = 0.3;
  double rho = 7850.0;

  // Throws BadDimension when E <= 0, nu outside [0, 0.5) or rho <= 0.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Element-level kernels for the trilinear 8-node cube of edge h.
// Voigt order: xx, yy, zz, yz, xz, xy with engineering shear strains.
// ---------------------------------------------------------------------------

Mat6 elasticity_matrix(double E, double nu);

// Strain-displacement matrix at natural coordinates in [-1, 1]^3.
StrainDisplacement strain_displacement(double h, double xi, double eta, double zeta);

// Physical shape-function gradients (3 x 8) at natural coordinates.
Eigen::Matrix<double, 3, 8> shape_gradients(double h, double xi, double eta, double zeta);

// Element stiffness with 2x2x2 Gauss quadrature.
Mat24 hex_element_stiffness(const Material& material, double h);

// sigma : epsilon with engineering shear in the strain vector.
double double_contraction(const Vec6& stress, const Vec6& strain);
double trace(const Vec6& tensor);
double von_mises(const Vec6& stress);

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

// Symmetric operator on the full DOF vector; constrained DOFs are treated
// as prescribed zero on input and output.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t size() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  virtual std::vector<double> diagonal() const = 0;
  virtual const std::vector<std::uint8_t>& constrained() const = 0;
};

// Assembly-free stiffness K = sum_e occupancy_e * K0 over the design elements.
class StiffnessOperator : public LinearOperator {
 public:
  StiffnessOperator(const Domain& domain, Topology topology, const Material& material,
                    std::vector<std::uint8_t> constrained, int threads = 1);

  std::size_t size() const override { return domain_->dof_count(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  std::vector<double> diagonal() const override;
  const std::vector<std::uint8_t>& constrained() const override { return constrained_; }

  // K x without any constraint masking.
  void apply_unconstrained(std::span<const double> x, std::span<double> y) const;

  const Domain& domain() const { return *domain_; }
  const Topology& topology() const { return topology_; }
  const Material& material() const { return material_; }
  const Mat24& element_matrix() const { return k0_; }
  const std::vector<int>& design_elements() const { return elements_; }
  int threads() const { return threads_; }

  Vec24 gather(std::span<const double> x, int e) const;
  std::array<int, 24> element_dofs(int e) const;

 private:
  template <class Kernel>
  void for_each_element(Kernel&& kernel) const;

  void apply_impl(std::span<const double> x, std::span<double> y, bool masked) const;

  const Domain* domain_;
  Topology topology_;
  Material material_;
  std::vector<std::uint8_t> constrained_;
  Mat24 k0_;
  std::vector<int> elements_;
  std::array<std::vector<int>, 8> colors_;
  std::array<int, 8> corner_offset_{};
  int threads_;
};

struct ElementState {
  Vec6 strain;
  Vec6 stress;
  double von_mises = 0.0;
};

// Centroid strain and stress; stress uses E * occupancy_e.
ElementState element_state(const StiffnessOperator& op, std::span<const double> u, int e);

// ---------------------------------------------------------------------------
// Deflation space: rigid-body modes of cubic element agglomerates
// ---------------------------------------------------------------------------

class DeflationSpace {
 public:
  DeflationSpace() = default;

  // `block` is the block edge in elements (>= 2). Each block contributes the
  // rigid modes of its solid nodes and of its void-only nodes.
  static DeflationSpace build(const Domain& domain, const Topology& topology,
                              const LinearOperator& op, int block);

  bool empty() const { return active_columns_ == 0; }
  std::size_t coarse_size() const { return columns_; }
  std::size_t active_columns() const { return active_columns_; }

  // W^T r
  Eigen::VectorXd restrict(std::span<const double> r) const;
  // (A W)^T z
  Eigen::VectorXd restrict_operator(std::span<const double> z) const;
  // x += scale * W c
  void prolong_add(const Eigen::VectorXd& c, std::span<double> x, double scale = 1.0) const;
  // y += scale * (A W) c
  void prolong_operator_add(const Eigen::VectorXd& c, std::span<double> y, double scale = 1.0) const;
  // (W^T A W)^{-1} rhs
  Eigen::VectorXd coarse_solve(const Eigen::VectorXd& rhs) const;

  // Basis column `col` as a full-length vector (testing aid).
  std::vector<double> basis_vector(std::size_t col) const;

 private:
  struct SparseColumn {
    std::vector<int> index;
    std::vector<double> value;
  };

  std::vector<int> node_block_;
  std::vector<double> basis_;  // dof * 6 + mode
  std::vector<SparseColumn> aw_;
  std::size_t columns_ = 0;
  std::vector<int> compact_;  // column -> row of the factored matrix, -1 if unused
  std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
  std::size_t active_columns_ = 0;
};

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

struct SolverOptions {
  double tol = 1e-8;
  int max_iters = 0;  // 0: 10 * sqrt(DOF)
  bool deflation = true;
  int block = 4;
  int threads = 1;
};

struct SolveResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;
};

// Jacobi-preconditioned (deflated when `deflation` is non-null and
// non-empty) conjugate gradients. Throws ConvergenceError or SingularSystem.
SolveResult solve_pcg(const LinearOperator& op, std::span<const double> b, double tol,
                      int max_iters, const DeflationSpace* deflation = nullptr,
                      std::span<const double> x0 = {});

SolveResult solve_static(const StiffnessOperator& op, std::span<const double> f,
                         const SolverOptions& options, const DeflationSpace* deflation = nullptr,
                         std::span<const double> x0 = {});

int default_max_iterations(std::size_t dofs);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

}  // namespace atls
