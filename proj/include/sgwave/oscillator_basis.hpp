#pragma once

// Unit-frequency harmonic-oscillator eigenfunctions and the transforms
// between oscillator coefficients and grid samples.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sgwave/core_model.hpp"

namespace sgwave {

/// phi_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2), by the three-term
/// recurrence on normalized functions.
inline double ho_eigenfunction(int n, double x) {
  double prev = 0.0;
  double cur = std::exp(-0.5 * x * x) / std::sqrt(std::sqrt(std::numbers::pi));
  for (int k = 1; k <= n; ++k) {
    const double next = std::sqrt(2.0 / k) * x * cur - std::sqrt((k - 1.0) / k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// d phi_n / dx = -x phi_n + sqrt(2n) phi_{n-1}.
inline double ho_eigenfunction_derivative(int n, double x) {
  const double lower = n > 0 ? std::sqrt(2.0 * n) * ho_eigenfunction(n - 1, x) : 0.0;
  return -x * ho_eigenfunction(n, x) + lower;
}

/// Table phi_n(x_j) with rows n = 0..n_basis-1 and one column per point.
inline RMatrix ho_table(int n_basis, const RVector& xs) {
  RMatrix t(n_basis, xs.size());
  const double c0 = 1.0 / std::sqrt(std::sqrt(std::numbers::pi));
  for (Eigen::Index j = 0; j < xs.size(); ++j) {
    const double x = xs(j);
    t(0, j) = c0 * std::exp(-0.5 * x * x);
    if (n_basis > 1) t(1, j) = std::sqrt(2.0) * x * t(0, j);
    for (int k = 2; k < n_basis; ++k)
      t(k, j) = std::sqrt(2.0 / k) * x * t(k - 1, j) - std::sqrt((k - 1.0) / k) * t(k - 2, j);
  }
  return t;
}

/// Gauss-Hermite rule with the Gaussian weight folded into the weights:
/// sum_i weights[i] f(nodes[i]) ~ integral f(x) dx for f = polynomial * exp(-x^2).
struct BasisSpec {
  int n_basis = 0;
  RVector nodes;
  RVector weights;
};

/// Golub-Welsch nodes, polished by Newton on the normalized recurrence.
/// weights[i] = 1 / (K phi_{K-1}(x_i)^2), which avoids underflow of the
/// bare Gauss-Hermite weights.
inline BasisSpec make_basis_spec(int n_basis, int node_count = 0) {
  if (n_basis < 1) throw ValidationError("n_basis: must be >= 1");
  const int K = node_count > 0 ? node_count : 2 * n_basis;
  if (K < 2 * n_basis) throw ValidationError("node_count: need at least 2 * n_basis nodes");

  RMatrix jacobi = RMatrix::Zero(K, K);
  for (int k = 1; k < K; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(jacobi, Eigen::EigenvaluesOnly);
  RVector nodes = eig.eigenvalues();

  RVector weights(K);
  for (int i = 0; i < K; ++i) {
    double x = nodes(i);
    for (int iter = 0; iter < 5; ++iter) {
      // phi_K(x) = 0 at the nodes; phi_K' = -x phi_K + sqrt(2K) phi_{K-1}.
      const double pk = ho_eigenfunction(K, x);
      const double dpk = ho_eigenfunction_derivative(K, x);
      if (dpk == 0.0) break;
      const double step = pk / dpk;
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    nodes(i) = x;
    const double p = ho_eigenfunction(K - 1, x);
    weights(i) = 1.0 / (K * p * p);
  }
  return BasisSpec{n_basis, nodes, weights};
}

template <class F>
double quadrature(const BasisSpec& spec, F&& f) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < spec.nodes.size(); ++i) sum += spec.weights(i) * f(spec.nodes(i));
  return sum;
}

/// c_nm = integral f(x, z) phi_n(x) phi_m(z) dx dz for a complex function given
/// analytically, on the tensor Gauss-Hermite rule.
template <class F>
CMatrix project_function(const BasisSpec& spec, F&& f) {
  const auto K = spec.nodes.size();
  const RMatrix table = ho_table(spec.n_basis, spec.nodes);
  const RMatrix weighted = table * spec.weights.asDiagonal();
  CMatrix samples(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j) samples(i, j) = f(spec.nodes(i), spec.nodes(j));
  return weighted.cast<cplx>() * samples * weighted.transpose().cast<cplx>();
}

/// Grid samples of the physical spinor, including the exp(+-i t S z0 / 2)
/// phases of the interaction frame. The warning flag is set when the grid
/// loses more than 1e-4 of the coefficient norm.
inline GridSpinor coeffs_to_grid(const SpinorCoeffs& c, const SimParams& p) {
  if (c.a.rows() != p.n_basis || c.a.cols() != p.n_basis || c.b.rows() != p.n_basis ||
      c.b.cols() != p.n_basis)
    throw ValidationError("coeffs: matrix shape does not match n_basis");
  const Grid grid = grid_of(p);
  const CMatrix table = ho_table(p.n_basis, grid.coords()).cast<cplx>();
  const cplx phase = interaction_phase(c.t, p);

  GridSpinor out;
  out.grid = grid;
  out.t = c.t;
  out.up = phase * (table.transpose() * c.a * table);
  out.down = std::conj(phase) * (table.transpose() * c.b * table);
  out.truncation_warning = std::abs(out.norm() - c.norm()) > 1e-4;
  return out;
}

struct BasisProjection {
  SpinorCoeffs coeffs;
  double residual = 0.0;  ///< fraction of the grid norm outside the basis
  bool truncation_warning = false;
};

/// Trapezoid-rule projection of a grid spinor onto the basis, removing the
/// interaction-frame phases. Warns when the residual exceeds 1e-3.
inline BasisProjection grid_to_coeffs(const GridSpinor& g, const SimParams& p) {
  if (!(g.grid == grid_of(p))) throw ValidationError("grid: geometry does not match params");
  const RMatrix table = ho_table(p.n_basis, g.grid.coords());
  const CMatrix weighted = (table * g.grid.trapezoid_weights().asDiagonal()).cast<cplx>();
  const cplx phase = interaction_phase(g.t, p);

  BasisProjection out;
  out.coeffs.t = g.t;
  out.coeffs.a = std::conj(phase) * (weighted * g.up * weighted.transpose());
  out.coeffs.b = phase * (weighted * g.down * weighted.transpose());
  const double grid_norm = g.norm();
  out.residual = grid_norm > 0.0 ? std::max(0.0, 1.0 - out.coeffs.norm() / grid_norm) : 0.0;
  out.truncation_warning = out.residual > 1e-3;
  return out;
}

}  // namespace sgwave
