#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "removal.hpp"
#include "sensitivity.hpp"

using namespace atls;
using namespace atls::testing;

namespace {

const Material kSteel{2e11, 0.3, 7850.0};

struct Static {
  Domain domain;
  LoadCase load_case;
  std::vector<double> f;
  std::unique_ptr<StiffnessOperator> k;
  std::vector<double> u;
};

Static solve(const DomainConfig& cfg, LoadCase (*make_case)(const Domain&, double), double force = 1000.0) {
  Static s{Domain::build(cfg), {}, {}, nullptr, {}};
  s.load_case = make_case(s.domain, force);
  s.f = assemble_force(s.domain, s.load_case);
  s.k = std::make_unique<StiffnessOperator>(s.domain, Topology(s.domain), kSteel,
                                            constrained_dofs(s.domain, s.load_case));
  s.u = solve_static(*s.k, s.f, tight_solver()).x;
  return s;
}

LoadCase tip_shear(const Domain& d, double force) { return cantilever_case(d, {0, 0, -force}); }

}  // namespace

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

TEST(TopologicalEnergy, ZeroStateIsZero) {
  EXPECT_EQ(topological_energy(Vec6::Zero(), Vec6::Zero(), 0.3), 0.0);
}

TEST(TopologicalEnergy, UniaxialUnitStress) {
  const double E = 2e11, nu = 0.3;
  Vec6 s = Vec6::Zero(), e = Vec6::Zero();
  s(0) = 1.0;
  e(0) = 1.0 / E;
  e(1) = e(2) = -nu / E;
  EXPECT_NEAR(topological_energy(s, e, nu) * E, 3.032967032967033, 1e-12);
}

TEST(TopologicalEnergy, PureShearIndependentOfPoisson) {
  const double E = 2e11, s12 = 5e6;
  for (double nu : {0.0, 0.2, 0.3, 0.45}) {
    Vec6 s = Vec6::Zero(), e = Vec6::Zero();
    s(5) = s12;
    e(5) = s12 * 2 * (1 + nu) / E;
    EXPECT_NEAR(topological_energy(s, e, nu), 8 * s12 * s12 / E, 1e-9 * 8 * s12 * s12 / E);
  }
}

// ---------------------------------------------------------------------------
// Compliance field
// ---------------------------------------------------------------------------

TEST(ComplianceField, ZeroDisplacementGivesZeroField) {
  const auto s = solve(grid(4, 2, 2, 0.01), tip_shear);
  const std::vector<double> zero(s.u.size(), 0.0);
  for (double v : compliance_sensitivity(*s.k, zero)) EXPECT_EQ(v, 0.0);
}

TEST(ComplianceField, QuadraticInLoadWithStableOrdering) {
  const auto s = solve(grid(6, 3, 2, 0.01), tip_shear);
  auto u3 = s.u;
  for (double& v : u3) v *= 3.0;
  const auto t1 = compliance_sensitivity(*s.k, s.u);
  const auto t3 = compliance_sensitivity(*s.k, u3);
  for (std::size_t e = 0; e < t1.size(); ++e) EXPECT_NEAR(t3[e], 9.0 * t1[e], 1e-12 * std::abs(9.0 * t1[e]) + 1e-300);
  EXPECT_DOUBLE_EQ(oracle::spearman(t1, t3), 1.0);
}

TEST(ComplianceField, FiniteOnErsatzElements) {
  auto s = solve(grid(6, 3, 2, 0.01), tip_shear);
  Topology t(s.domain);
  t.set_solid(s.domain, 4, false);
  t.set_solid(s.domain, 9, false);
  const StiffnessOperator k(s.domain, t, kSteel, s.k->constrained());
  const auto u = solve_static(k, s.f, tight_solver()).x;
  const auto field = compliance_sensitivity(k, u);
  for (double v : field) EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(field[4], 0.0);
}

TEST(ComplianceField, ParallelEqualsSerialBitwise) {
  const auto s = solve(grid(6, 4, 3, 0.01), tip_shear);
  const StiffnessOperator k4(s.domain, s.k->topology(), kSteel, s.k->constrained(), 4);
  EXPECT_EQ(compliance_sensitivity(*s.k, s.u), compliance_sensitivity(k4, s.u));
}

TEST(ComplianceField, RanksLikeElementRemoval) {
  const auto s = solve(plate_with_hole(), plate_shear_case);
  const auto field = compliance_sensitivity(*s.k, s.u);
  const auto study = removal_study(s.domain, s.k->topology(), kSteel, s.k->constrained(), compliance_quantity(s.f));
  EXPECT_GE(oracle::spearman(pick(field, study.elements), study.delta), 0.9);
}

// ---------------------------------------------------------------------------
// p-norm stress and adjoint
// ---------------------------------------------------------------------------

TEST(PNormStress, UniformFieldGivesThatStress) {
  // Homogeneous strain on a free grid: every element carries the same von Mises stress.
  const auto d = Domain::build(grid(3, 2, 2, 0.1));
  const StiffnessOperator k(d, Topology(d), kSteel, std::vector<std::uint8_t>(d.dof_count(), 0));
  std::vector<double> u(d.dof_count());
  for (std::size_t n = 0; n < d.node_count(); ++n) {
    const auto x = d.node_position(int(n));
    u[3 * n] = 1e-4 * x[0];
    u[3 * n + 1] = -2e-5 * x[1] + 3e-5 * x[2];
  }
  const double vm = element_state(k, u, 0).von_mises;
  for (int p : {2, 6, 10}) EXPECT_NEAR(pnorm_stress(k, u, p), vm, 1e-12 * vm);
}

TEST(PNormStress, SingleElementIsItsVonMises) {
  const auto d = Domain::build(grid(1, 1, 1, 0.1));
  const StiffnessOperator k(d, Topology(d), kSteel, std::vector<std::uint8_t>(d.dof_count(), 0));
  std::mt19937 rng(1);
  const auto u = oracle::random_vector(d.dof_count(), rng);
  const double vm = element_state(k, u, 0).von_mises;
  EXPECT_NEAR(pnorm_stress(k, u, 6), vm, 1e-12 * vm);
}

TEST(PNormStress, TwoEqualWeightElements) {
  // Element 0 shares only its x = h face with element 1; moving the far nodes
  // strains element 1 and leaves element 0 stress free.
  const auto d = Domain::build(grid(2, 1, 1, 0.1));
  const StiffnessOperator k(d, Topology(d), kSteel, std::vector<std::uint8_t>(d.dof_count(), 0));
  std::vector<double> u(d.dof_count(), 0.0);
  for (std::size_t n = 0; n < d.node_count(); ++n)
    if (d.node_ijk(int(n))[0] == 2) u[3 * n] = 1e-4;
  const double s = element_state(k, u, 1).von_mises;
  ASSERT_EQ(element_state(k, u, 0).von_mises, 0.0);
  EXPECT_NEAR(pnorm_stress(k, u, 6), s * std::pow(0.5, 1.0 / 6.0), 1e-12 * s);
}

TEST(PNormStress, OddOrSmallExponentRejected) {
  const auto s = solve(grid(2, 1, 1, 0.1), tip_shear);
  EXPECT_THROW(pnorm_stress(*s.k, s.u, 3), Error);
  EXPECT_THROW(pnorm_stress(*s.k, s.u, 0), Error);
}

TEST(StressAdjoint, ZeroDisplacementIsPreconditionViolation) {
  const auto s = solve(grid(3, 2, 2, 0.01), tip_shear);
  const std::vector<double> zero(s.u.size(), 0.0);
  try {
    stress_adjoint(*s.k, zero, 6, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
  }
}

TEST(StressAdjoint, RightHandSideMatchesCentralDifferences) {
  const auto s = solve(grid(6, 3, 2, 0.01), tip_shear);
  const int p = 6;
  const auto g = pnorm_stress_gradient(*s.k, s.u, p);
  const double step = 1e-6 * norm(s.u);
  std::mt19937 rng(11);
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < s.u.size(); ++i)
    if (!s.k->constrained()[i]) free.push_back(i);
  std::shuffle(free.begin(), free.end(), rng);
  double num = 0, den = 0;
  for (std::size_t t = 0; t < 20; ++t) {
    const std::size_t i = free[t];
    auto up = s.u, dn = s.u;
    up[i] += step;
    dn[i] -= step;
    const double fd = (pnorm_stress(*s.k, up, p) - pnorm_stress(*s.k, dn, p)) / (2 * step);
    num += (fd - g[i]) * (fd - g[i]);
    den += g[i] * g[i];
  }
  EXPECT_LE(std::sqrt(num / den), 1e-4);
}

TEST(StressAdjoint, QuadraticFormForSingleElementWithExponentTwo) {
  const double E = kSteel.E, nu = kSteel.nu, h = 0.1;
  const auto d = Domain::build(grid(1, 1, 1, h));
  const StiffnessOperator k(d, Topology(d), kSteel, std::vector<std::uint8_t>(d.dof_count(), 0));
  std::mt19937 rng(2);
  const auto u = oracle::random_vector(d.dof_count(), rng);
  // vm^2 = s^T P s with s = C B0 u; d vm / du = B0^T C P s / vm.
  Eigen::Matrix<double, 6, 6> P = Eigen::Matrix<double, 6, 6>::Zero();
  P.topLeftCorner<3, 3>() << 1, -0.5, -0.5, -0.5, 1, -0.5, -0.5, -0.5, 1;
  P.bottomRightCorner<3, 3>() = 3 * Eigen::Matrix3d::Identity();
  const Eigen::Matrix<double, 6, 24> CB = elasticity_matrix(E, nu) * strain_displacement(h, 0, 0, 0);
  const Eigen::Matrix<double, 24, 24> Q = CB.transpose() * P * CB;
  const Eigen::Matrix<double, 24, 1> ue = k.gather(u, 0);
  const double vm = std::sqrt(ue.dot(Q * ue));
  const Eigen::Matrix<double, 24, 1> expected = Q * ue / vm;
  const auto g = pnorm_stress_gradient(k, u, 2);
  EXPECT_LE((k.gather(g, 0) - expected).norm(), 1e-8 * expected.norm());
}

TEST(StressAdjoint, SolvesAdjointSystem) {
  const auto s = solve(grid(6, 3, 2, 0.01), tip_shear);
  const auto rhs = pnorm_stress_gradient(*s.k, s.u, 6);
  const auto adj = stress_adjoint(*s.k, s.u, 6, tight_solver());
  std::vector<double> r(rhs.size());
  s.k->apply(adj.x, r);
  double num = 0;
  for (std::size_t i = 0; i < r.size(); ++i) num += (r[i] - rhs[i]) * (r[i] - rhs[i]);
  EXPECT_LE(std::sqrt(num) / norm(rhs), 1e-9);
}

TEST(StressField, ZeroAdjointGivesZeroField) {
  const auto s = solve(grid(4, 2, 2, 0.01), tip_shear);
  const std::vector<double> zero(s.u.size(), 0.0);
  for (double v : stress_sensitivity(*s.k, s.u, zero)) EXPECT_EQ(v, 0.0);
}

TEST(StressField, SelfAdjointReducesToComplianceField) {
  const auto s = solve(plate_with_hole(), plate_shear_case);
  const auto a = stress_sensitivity(*s.k, s.u, s.u);
  const auto b = compliance_sensitivity(*s.k, s.u);
  for (std::size_t e = 0; e < a.size(); ++e) EXPECT_NEAR(a[e], b[e], 1e-12 * std::abs(b[e]) + 1e-300);
}

TEST(StressField, RanksLikeElementRemovalOnStressedHalf) {
  const auto s = solve(plate_with_hole(), plate_shear_case);
  const int p = 6;
  const auto adj = stress_adjoint(*s.k, s.u, p, tight_solver()).x;
  const auto field = stress_sensitivity(*s.k, s.u, adj);
  const auto vm = von_mises_field(*s.k, s.u);
  const auto study = removal_study(s.domain, s.k->topology(), kSteel, s.k->constrained(), pnorm_quantity(s.f, p));
  const auto key = pick(vm, study.elements);
  EXPECT_GE(oracle::spearman(top_half(pick(field, study.elements), key), top_half(study.delta, key)), 0.8);
}

// ---------------------------------------------------------------------------
// Eigen and buckling fields
// ---------------------------------------------------------------------------

TEST(EigenField, RigidModeGivesZero) {
  const auto d = Domain::build(grid(2, 1, 1, 0.1));
  const StiffnessOperator k(d, Topology(d), kSteel, std::vector<std::uint8_t>(d.dof_count(), 0));
  std::vector<double> mode(d.dof_count(), 0.0);
  for (std::size_t n = 0; n < d.node_count(); ++n) mode[3 * n + 1] = 0.3;
  for (double v : eigen_sensitivity(k, mode, 0.0)) EXPECT_NEAR(v, 0.0, 1e-20);
}

TEST(EigenField, StrainMinusKineticTerm) {
  // Uniform translation t: sigma:eps = 0 and |u|^2 = t^2 at every centroid.
  const auto d = Domain::build(grid(2, 1, 1, 0.1));
  const StiffnessOperator k(d, Topology(d), kSteel, std::vector<std::uint8_t>(d.dof_count(), 0));
  std::vector<double> mode(d.dof_count(), 0.0);
  for (std::size_t n = 0; n < d.node_count(); ++n) mode[3 * n] = 0.5;
  const double omega2 = 4.0 / (kSteel.rho * 0.25);
  for (double v : eigen_sensitivity(k, mode, omega2)) EXPECT_NEAR(v, -4.0, 1e-12);
}

TEST(EigenField, ClampedBarSignPatternAndRanking) {
  const auto d = Domain::build(grid(10, 4, 2, 0.01));
  const auto lc = cantilever_case(d, {0, 0, 0});
  const StiffnessOperator k(d, Topology(d), kSteel, constrained_dofs(d, lc));
  EigenOptions eo;
  eo.tol = 1e-9;
  const auto r = solve_modal(k, MassOperator(k), eo, tight_solver());
  const auto field = eigen_sensitivity(k, r.vectors[0], r.values[0]);
  // Near the clamp strain energy dominates; at the free end the kinetic term does.
  EXPECT_GT(field[std::size_t(d.element_index(0, 0, 0))], field[std::size_t(d.element_index(9, 0, 0))]);
  const auto study = removal_study(d, k.topology(), kSteel, k.constrained(), modal_quantity());
  const auto t = pick(field, study.elements);
  const auto drop = negated(study.delta);
  int agree = 0;
  for (std::size_t i = 0; i < t.size(); ++i) agree += (t[i] > 0) == (drop[i] > 0);
  EXPECT_GE(double(agree) / double(t.size()), 0.9);
  EXPECT_GE(oracle::spearman(t, drop), 0.8);
}

TEST(BucklingField, DirectSubstitutionOnOneElement) {
  const auto d = Domain::build(grid(1, 1, 1, 0.1));
  const StiffnessOperator k(d, Topology(d), kSteel, std::vector<std::uint8_t>(d.dof_count(), 0));
  std::mt19937 rng(4);
  const auto u = oracle::random_vector(d.dof_count(), rng);
  const auto g = geometric_stiffness(k, u);
  const auto mode = oracle::random_vector(d.dof_count(), rng);
  const Eigen::Matrix<double, 24, 1> m = k.gather(mode, 0);
  const double ke = m.dot(k.element_matrix() * m), kg = m.dot(g.element_matrix(0) * m);
  EXPECT_NEAR(buckling_sensitivity(k, g, mode, 2.5)[0], ke - 2.5 * kg, 1e-9 * std::abs(ke));
  const std::vector<double> zero(d.dof_count(), 0.0);
  EXPECT_EQ(buckling_sensitivity(k, g, zero, 2.5)[0], 0.0);
}

TEST(BucklingField, EulerColumnRemovalOracle) {
  const auto s = solve(grid(10, 2, 2, 0.01), axial_compression_case);
  const auto g = geometric_stiffness(*s.k, s.u);
  EigenOptions eo;
  eo.tol = 1e-9;
  const auto r = solve_buckling(*s.k, g, eo, tight_solver());
  const auto field = buckling_sensitivity(*s.k, g, r.vectors[0], r.values[0]);
  const auto study = removal_study(s.domain, s.k->topology(), kSteel, s.k->constrained(), buckling_quantity(s.f));
  const auto t = pick(field, study.elements);
  const auto drop = negated(study.delta);
  EXPECT_GE(oracle::spearman(t, drop), 0.8);
  // Paired comparison: the higher-field element of a random pair costs more P.
  std::mt19937 rng(8);
  std::uniform_int_distribution<std::size_t> pick_one(0, t.size() - 1);
  int agree = 0;
  for (int i = 0; i < 20; ++i) {
    std::size_t a = pick_one(rng), b = pick_one(rng);
    while (b == a) b = pick_one(rng);
    agree += (t[a] > t[b]) == (drop[a] > drop[b]);
  }
  EXPECT_GE(agree, 16);
}
