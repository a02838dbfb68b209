#pragma once

// Observables of the scattered packet: densities, spin flip, moments,
// overlaps between exact and approximate states, and polarisation
// asymmetry maps built from the two pure runs m0 = +1/2 and m0 = -1/2.

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "sgwave/core_model.hpp"

namespace sgwave {

/// Final states of the two pure runs, sharing time and grid.
struct RunPair {
  GridSpinor plus;   ///< m0 = +1/2
  GridSpinor minus;  ///< m0 = -1/2

  const GridSpinor& run(Spin m0) const { return m0 == Spin::up ? plus : minus; }
};

inline void require_common_frame(const GridSpinor& a, const GridSpinor& b) {
  if (!(a.grid == b.grid)) throw ValidationError("frame mismatch: grids differ");
  if (std::abs(a.t - b.t) > 1e-12) throw ValidationError("frame mismatch: states at different times");
}

inline void validate(const RunPair& pair) {
  require_common_frame(pair.plus, pair.minus);
  for (const GridSpinor* g : {&pair.plus, &pair.minus})
    if (std::abs(g->norm() - 1.0) > 1e-4) throw ValidationError("run pair: state norm differs from 1 by more than 1e-4");
}

/// P0 = 1/2 sum_{m, m0} |<x z; m | Phi; m0>|^2, the unpolarised-beam density.
inline GridMap probability_density(const RunPair& pair) {
  require_common_frame(pair.plus, pair.minus);
  return {pair.plus.grid, 0.5 * (pair.plus.density() + pair.minus.density())};
}

inline GridMap spin_flip_density(const GridSpinor& final_state, Spin m0) {
  return {final_state.grid, final_state.component(opposite(m0)).cwiseAbs2()};
}

inline double spin_flip_probability(const GridSpinor& final_state, Spin m0) {
  return spin_flip_density(final_state, m0).integral();
}

struct Moments {
  double weight = 0.0;
  double mean_x = 0.0;
  double mean_z = 0.0;
  double var_x = 0.0;
  double var_z = 0.0;
};

/// Moments of a non-negative density on the grid.
inline Moments density_moments(const Grid& grid, const RMatrix& rho) {
  const RVector w = grid.trapezoid_weights();
  const RVector c = grid.coords();
  const RVector row_x = rho * w;              // integrated over z, function of x
  const RVector col_z = rho.transpose() * w;  // integrated over x, function of z
  Moments m;
  m.weight = w.dot(row_x);
  if (m.weight <= 0.0) return m;
  m.mean_x = w.dot(row_x.cwiseProduct(c)) / m.weight;
  m.mean_z = w.dot(col_z.cwiseProduct(c)) / m.weight;
  const RVector dx = c.array() - m.mean_x;
  const RVector dz = c.array() - m.mean_z;
  m.var_x = w.dot(row_x.cwiseProduct(dx.cwiseAbs2())) / m.weight;
  m.var_z = w.dot(col_z.cwiseProduct(dz.cwiseAbs2())) / m.weight;
  return m;
}

inline constexpr double kMomentWeightFloor = 1e-6;

/// Per-spin moments; a component holding less than 1e-6 probability has none.
struct ComponentMoments {
  std::optional<Moments> up;
  std::optional<Moments> down;
};

inline ComponentMoments component_moments(const GridSpinor& g) {
  ComponentMoments out;
  for (Spin s : {Spin::up, Spin::down}) {
    Moments m = density_moments(g.grid, g.component(s).cwiseAbs2());
    if (m.weight >= kMomentWeightFloor) (s == Spin::up ? out.up : out.down) = m;
  }
  return out;
}

/// Per-spin moments straight from oscillator coefficients, using
/// sqrt(2) x = a + a^dagger. Phases of the interaction frame cancel.
inline ComponentMoments coefficient_moments(const SpinorCoeffs& c) {
  auto one = [](const CMatrix& k) -> std::optional<Moments> {
    const double weight = k.squaredNorm();
    if (weight < kMomentWeightFloor) return std::nullopt;
    const Eigen::Index N = k.rows();
    // x k and z k, each one level beyond the basis so that <x^2> = |x k|^2
    CMatrix xk = CMatrix::Zero(N + 1, N);
    CMatrix zk = CMatrix::Zero(N, N + 1);
    const double r2 = std::sqrt(2.0);
    for (Eigen::Index m = 0; m < N; ++m)
      for (Eigen::Index n = 0; n <= N; ++n) {
        cplx v = 0.0;
        if (n + 1 < N) v += std::sqrt(double(n + 1)) * k(n + 1, m);
        if (n >= 1) v += std::sqrt(double(n)) * k(n - 1, m);
        xk(n, m) = v / r2;
      }
    for (Eigen::Index m = 0; m <= N; ++m)
      for (Eigen::Index n = 0; n < N; ++n) {
        cplx v = 0.0;
        if (m + 1 < N) v += std::sqrt(double(m + 1)) * k(n, m + 1);
        if (m >= 1) v += std::sqrt(double(m)) * k(n, m - 1);
        zk(n, m) = v / r2;
      }
    Moments mo;
    mo.weight = weight;
    mo.mean_x = (k.conjugate().cwiseProduct(xk.topRows(N))).sum().real() / weight;
    mo.mean_z = (k.conjugate().cwiseProduct(zk.leftCols(N))).sum().real() / weight;
    mo.var_x = xk.squaredNorm() / weight - mo.mean_x * mo.mean_x;
    mo.var_z = zk.squaredNorm() / weight - mo.mean_z * mo.mean_z;
    return mo;
  };
  return {one(c.a), one(c.b)};
}

/// Moments of P0 restricted to the upper (z > 0) and lower (z < 0) halves.
struct LobeMoments {
  Moments upper;
  Moments lower;
};

inline LobeMoments lobe_moments(const GridMap& p0) {
  const Grid& g = p0.grid;
  RMatrix up = p0.values, lo = p0.values;
  for (int iz = 0; iz < g.points; ++iz) {
    const double z = g.coord(iz);
    if (!(z > 0.0)) up.col(iz).setZero();
    if (!(z < 0.0)) lo.col(iz).setZero();
  }
  return {density_moments(g, up), density_moments(g, lo)};
}

/// O = 1/2 |sum_{m0} <Phi_ex; m0 | Phi_ap; m0>|.
inline double overlap(const RunPair& exact, const RunPair& approx) {
  for (Spin s : {Spin::up, Spin::down}) require_common_frame(exact.run(s), approx.run(s));
  return 0.5 * std::abs(inner(exact.plus, approx.plus) + inner(exact.minus, approx.minus));
}

struct AsymmetryMaps {
  GridMap ax;
  GridMap ay;
  GridMap az;
};

/// A_i(x, z) = sum_{m, m0, m0'} psi_{m m0} psi*_{m m0'} <m0|sigma_i|m0'>.
inline AsymmetryMaps asymmetry_maps(const RunPair& pair) {
  require_common_frame(pair.plus, pair.minus);
  const CMatrix cross = pair.plus.up.cwiseProduct(pair.minus.up.conjugate()) +
                        pair.plus.down.cwiseProduct(pair.minus.down.conjugate());
  const Grid& g = pair.plus.grid;
  return {GridMap{g, 2.0 * cross.real()}, GridMap{g, 2.0 * cross.imag()},
          GridMap{g, pair.plus.density() - pair.minus.density()}};
}

/// A_z = +2 P0 above z = 0 and -2 P0 below; zero on the z = 0 gridline.
inline GridMap textbook_asymmetry(const GridMap& p0) {
  GridMap out{p0.grid, p0.values};
  const double eps = 1e-9 * p0.grid.spacing();
  for (int iz = 0; iz < p0.grid.points; ++iz) {
    const double z = p0.grid.coord(iz);
    const double sign = z > eps ? 2.0 : (z < -eps ? -2.0 : 0.0);
    out.values.col(iz) *= sign;
  }
  return out;
}

struct ObservableReport {
  GridMap p0;
  AsymmetryMaps asymmetries;
  GridMap flip_density;  ///< up -> down component of the m0 = +1/2 run
  double flip_up_to_down = 0.0;
  double flip_down_to_up = 0.0;
  ComponentMoments moments_plus;   ///< per spin, m0 = +1/2 run
  ComponentMoments moments_minus;  ///< per spin, m0 = -1/2 run
  LobeMoments lobes;
  std::map<std::string, double> overlap_deficits;
};

inline ObservableReport make_report(const RunPair& pair) {
  validate(pair);
  ObservableReport r;
  r.p0 = probability_density(pair);
  r.asymmetries = asymmetry_maps(pair);
  r.flip_density = spin_flip_density(pair.plus, Spin::up);
  r.flip_up_to_down = spin_flip_probability(pair.plus, Spin::up);
  r.flip_down_to_up = spin_flip_probability(pair.minus, Spin::down);
  r.moments_plus = component_moments(pair.plus);
  r.moments_minus = component_moments(pair.minus);
  r.lobes = lobe_moments(r.p0);
  return r;
}

}  // namespace sgwave
