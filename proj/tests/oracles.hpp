#pragma once

// Independent reference computations used only by the test suites. Nothing
// here calls into the element kernels under test.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "voxel_mesh.hpp"

namespace atls::oracle {

// Index-form isotropic stiffness
//   K[3a+i][3b+j] = int lambda dNa/dxi dNb/dxj + mu (delta_ij gradNa.gradNb + dNa/dxj dNb/dxi)
// integrated with a 3x3x3 Gauss rule (exact for the trilinear cube).
inline Eigen::MatrixXd element_stiffness(double E, double nu, double h) {
  const double lambda = E * nu / ((1 + nu) * (1 - 2 * nu));
  const double mu = E / (2 * (1 + nu));
  const double pts[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double wts[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(24, 24);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      for (int s = 0; s < 3; ++s) {
        const double xi[3] = {pts[p], pts[q], pts[s]};
        const double w = wts[p] * wts[q] * wts[s] * (h * h * h / 8.0);
        double grad[8][3];
        for (int a = 0; a < 8; ++a) {
          const auto& c = kHexCorners[std::size_t(a)];
          double sgn[3];
          for (int d = 0; d < 3; ++d) sgn[d] = c[std::size_t(d)] ? 1.0 : -1.0;
          for (int d = 0; d < 3; ++d) {
            double v = sgn[d] / 8.0 * (2.0 / h);
            for (int o = 0; o < 3; ++o)
              if (o != d) v *= (1.0 + sgn[o] * xi[o]);
            grad[a][d] = v;
          }
        }
        for (int a = 0; a < 8; ++a)
          for (int b = 0; b < 8; ++b) {
            double gg = 0;
            for (int d = 0; d < 3; ++d) gg += grad[a][d] * grad[b][d];
            for (int i = 0; i < 3; ++i)
              for (int j = 0; j < 3; ++j) {
                double v = lambda * grad[a][i] * grad[b][j] + mu * grad[a][j] * grad[b][i];
                if (i == j) v += mu * gg;
                K(3 * a + i, 3 * b + j) += w * v;
              }
          }
      }
  return K;
}

// Index-form initial-stress kernel with a 3x3x3 Gauss rule:
//   G[3a+i][3b+i] = -int dNa/dxk sigma_kl dNb/dxl
inline Eigen::MatrixXd geometric_element(const Eigen::Matrix3d& sigma, double h) {
  const double pts[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double wts[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(24, 24);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      for (int s = 0; s < 3; ++s) {
        const double xi[3] = {pts[p], pts[q], pts[s]};
        const double w = wts[p] * wts[q] * wts[s] * (h * h * h / 8.0);
        double grad[8][3];
        for (int a = 0; a < 8; ++a) {
          const auto& c = kHexCorners[std::size_t(a)];
          for (int d = 0; d < 3; ++d) {
            double v = (c[std::size_t(d)] ? 1.0 : -1.0) / 8.0 * (2.0 / h);
            for (int o = 0; o < 3; ++o)
              if (o != d) v *= (1.0 + (c[std::size_t(o)] ? 1.0 : -1.0) * xi[o]);
            grad[a][d] = v;
          }
        }
        for (int a = 0; a < 8; ++a)
          for (int b = 0; b < 8; ++b) {
            double v = 0;
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l) v += grad[a][k] * sigma(k, l) * grad[b][l];
            for (int i = 0; i < 3; ++i) G(3 * a + i, 3 * b + i) -= w * v;
          }
      }
  return G;
}

// Dense global stiffness over all DOFs (design elements only), no constraints.
inline Eigen::MatrixXd dense_stiffness(const Domain& domain, const Topology& topology, double E, double nu) {
  const Eigen::MatrixXd ke = element_stiffness(E, nu, domain.h());
  const auto n = Eigen::Index(domain.dof_count());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < domain.element_count(); ++e) {
    if (!domain.in_design(int(e))) continue;
    const auto nodes = domain.element_nodes(int(e));
    const double occ = topology.occupancy(int(e));
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            K(3 * nodes[std::size_t(a)] + i, 3 * nodes[std::size_t(b)] + j) += occ * ke(3 * a + i, 3 * b + j);
  }
  return K;
}

// Restricts to free DOFs, solves with LDL^T, scatters back (zeros elsewhere).
inline std::vector<double> dense_solve(const Eigen::MatrixXd& K, const std::vector<double>& f,
                                       const std::vector<std::uint8_t>& constrained) {
  std::vector<Eigen::Index> free;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!constrained[i]) free.push_back(Eigen::Index(i));
  const auto m = Eigen::Index(free.size());
  Eigen::MatrixXd Kff(m, m);
  Eigen::VectorXd ff(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    ff(r) = f[std::size_t(free[std::size_t(r)])];
    for (Eigen::Index c = 0; c < m; ++c) Kff(r, c) = K(free[std::size_t(r)], free[std::size_t(c)]);
  }
  const Eigen::VectorXd uf = Kff.ldlt().solve(ff);
  std::vector<double> u(f.size(), 0.0);
  for (Eigen::Index r = 0; r < m; ++r) u[std::size_t(free[std::size_t(r)])] = uf(r);
  return u;
}

inline Eigen::VectorXd as_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937& rng,
                                         const std::vector<std::uint8_t>* zero_mask = nullptr) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = (zero_mask && (*zero_mask)[i]) ? 0.0 : dist(rng);
  return v;
}

// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * double(i + j);
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace atls::oracle
