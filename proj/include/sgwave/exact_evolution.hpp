#pragma once

// Exact propagation: the coupled coefficient equations integrated with a
// fixed-step RK4 through the magnet (0 <= t <= 1), then free drift on the grid.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sgwave/core_model.hpp"
#include "sgwave/detail/fft2.hpp"
#include "sgwave/oscillator_basis.hpp"

namespace sgwave {

struct SpinorRates {
  CMatrix da;
  CMatrix db;
};

/// Time derivatives of the interaction-frame coefficients. Ladder terms that
/// leave the truncated basis contribute zero; textbook mode drops the a<->b
/// coupling.
inline SpinorRates ode_rhs(double t, const SpinorCoeffs& c, const SimParams& p) {
  const int N = c.n_basis();
  const CMatrix& a = c.a;
  const CMatrix& b = c.b;
  SpinorRates r{CMatrix::Zero(N, N), CMatrix::Zero(N, N)};

  const cplx kin = kI * (p.A / 4.0);
  const cplx field = kI * (p.S / (2.0 * std::sqrt(2.0)));
  const cplx to_down = std::exp(-kI * (p.S * p.z0 * t));  // multiplies b in da
  const cplx to_up = std::conj(to_down);                    // multiplies a in db

  // sq[k] = sqrt(k)
  std::vector<double> sq(N + 2);
  for (int k = 0; k < N + 2; ++k) sq[k] = std::sqrt(static_cast<double>(k));

  for (int m = 0; m < N; ++m) {
    for (int n = 0; n < N; ++n) {
      cplx ka = -2.0 * (n + m + 1) * a(n, m);
      cplx kb = -2.0 * (n + m + 1) * b(n, m);
      if (n + 2 < N) {
        ka += a(n + 2, m) * (sq[n + 1] * sq[n + 2]);
        kb += b(n + 2, m) * (sq[n + 1] * sq[n + 2]);
      }
      if (n >= 2) {
        ka += a(n - 2, m) * (sq[n] * sq[n - 1]);
        kb += b(n - 2, m) * (sq[n] * sq[n - 1]);
      }
      if (m + 2 < N) {
        ka += a(n, m + 2) * (sq[m + 1] * sq[m + 2]);
        kb += b(n, m + 2) * (sq[m + 1] * sq[m + 2]);
      }
      if (m >= 2) {
        ka += a(n, m - 2) * (sq[m] * sq[m - 1]);
        kb += b(n, m - 2) * (sq[m] * sq[m - 1]);
      }

      cplx za = 0.0, zb = 0.0;  // sqrt(2) z acting on each component
      if (m + 1 < N) {
        za += a(n, m + 1) * sq[m + 1];
        zb += b(n, m + 1) * sq[m + 1];
      }
      if (m >= 1) {
        za += a(n, m - 1) * sq[m];
        zb += b(n, m - 1) * sq[m];
      }

      cplx fa = za;
      cplx fb = -zb;
      if (!p.textbook_mode) {
        cplx xb = 0.0, xa = 0.0;  // sqrt(2) x acting on the other component
        if (n + 1 < N) {
          xb += b(n + 1, m) * sq[n + 1];
          xa += a(n + 1, m) * sq[n + 1];
        }
        if (n >= 1) {
          xb += b(n - 1, m) * sq[n];
          xa += a(n - 1, m) * sq[n];
        }
        fa -= xb * to_down;
        fb -= xa * to_up;
      }

      r.da(n, m) = kin * ka + field * fa;
      r.db(n, m) = kin * kb + field * fb;
    }
  }
  return r;
}

struct Snapshot {
  double t = 0.0;
  SpinorCoeffs coeffs;
};

struct EvolutionRecord {
  std::vector<Snapshot> snapshots;  ///< t = 0, every stride steps, and t = 1
  SpinorCoeffs final;
  double max_norm_drift = 0.0;
  double max_edge_population = 0.0;  ///< probability in the top two shells
  bool truncation_warning = false;
  std::optional<GridSpinor> final_grid;  ///< filled by evolve_and_drift
};

/// Probability in levels n >= N-2 or m >= N-2 of either component.
inline double edge_population(const SpinorCoeffs& c) {
  const int N = c.n_basis();
  const int w = std::min(2, N);
  double total = c.a.bottomRows(w).squaredNorm() + c.b.bottomRows(w).squaredNorm() +
                 c.a.rightCols(w).squaredNorm() + c.b.rightCols(w).squaredNorm();
  total -= c.a.bottomRightCorner(w, w).squaredNorm() + c.b.bottomRightCorner(w, w).squaredNorm();
  return total;
}

inline constexpr double kEdgePopulationLimit = 1e-6;
inline constexpr double kNormDriftLimit = 1e-4;

/// One classic RK4 step of length h from time t.
inline SpinorCoeffs rk4_step(const SpinorCoeffs& c, double t, double h, const SimParams& p) {
  auto shifted = [&](const SpinorRates& k, double f) {
    return SpinorCoeffs{c.a + f * k.da, c.b + f * k.db, t};
  };
  const SpinorRates k1 = ode_rhs(t, c, p);
  const SpinorRates k2 = ode_rhs(t + h / 2, shifted(k1, h / 2), p);
  const SpinorRates k3 = ode_rhs(t + h / 2, shifted(k2, h / 2), p);
  const SpinorRates k4 = ode_rhs(t + h, shifted(k3, h), p);
  return SpinorCoeffs{c.a + (h / 6.0) * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da),
                      c.b + (h / 6.0) * (k1.db + 2.0 * k2.db + 2.0 * k3.db + k4.db), t + h};
}

/// Integrates from t = 0 to t = 1 with fixed steps of params.dt (the last step
/// is shortened when 1/dt is not an integer).
inline EvolutionRecord evolve_in_magnet(const SpinorCoeffs& initial, const SimParams& p,
                                        int stride = 20) {
  validate(p);
  if (stride < 1) throw ValidationError("stride: must be >= 1");
  if (initial.n_basis() != p.n_basis) throw ValidationError("coeffs: shape does not match n_basis");
  const double norm0 = initial.norm();
  if (std::abs(norm0 - 1.0) > 1e-6) throw ValidationError("initial: state must be normalized");

  const double exact_steps = 1.0 / p.dt;
  long steps = std::lround(exact_steps);
  if (std::abs(steps - exact_steps) > 1e-9 * exact_steps) steps = static_cast<long>(std::ceil(exact_steps));

  EvolutionRecord rec;
  SpinorCoeffs c = initial;
  c.t = 0.0;
  rec.snapshots.push_back({0.0, c});
  rec.max_edge_population = edge_population(c);

  for (long k = 0; k < steps; ++k) {
    const double t = k * p.dt;
    const double h = std::min(p.dt, 1.0 - t);
    c = rk4_step(c, t, h, p);
    c.t = (k + 1 == steps) ? 1.0 : (k + 1) * p.dt;

    const double drift = std::abs(c.norm() - norm0);
    rec.max_norm_drift = std::max(rec.max_norm_drift, drift);
    if (!(drift <= kNormDriftLimit))
      throw NumericalError("integration failure: norm drifted by " + std::to_string(drift) +
                           " at t = " + std::to_string(c.t) +
                           "; use a smaller dt or a larger n_basis");
    rec.max_edge_population = std::max(rec.max_edge_population, edge_population(c));
    if ((k + 1) % stride == 0 || k + 1 == steps) rec.snapshots.push_back({c.t, c});
  }
  rec.truncation_warning = rec.max_edge_population > kEdgePopulationLimit;
  rec.final = c;
  return rec;
}

/// t_d = 2 z0 / (S A) - 1/2: the drift after which textbook lobes sit at +-z0.
inline double drift_time(const SimParams& p) {
  if (!(p.A * p.S > 0.0)) throw ValidationError("drift time undefined: requires A * S > 0");
  return 2.0 * p.z0 / (p.S * p.A) - 0.5;
}

/// Fraction of the norm sitting in the outer 5% of the grid on any side.
inline double boundary_population(const GridSpinor& g) {
  const int n = g.grid.points;
  const int band = std::max(1, n / 20);
  RMatrix rho = g.density();
  RMatrix inner_part = RMatrix::Zero(n, n);
  inner_part.block(band, band, n - 2 * band, n - 2 * band) =
      rho.block(band, band, n - 2 * band, n - 2 * band);
  const double total = integrate(g.grid, rho);
  return total > 0.0 ? (total - integrate(g.grid, inner_part)) / total : 0.0;
}

/// exp(-i h0 duration) applied spectrally: the grid is treated as periodic.
inline GridSpinor free_drift(const GridSpinor& state, double duration, const SimParams& p) {
  if (!(std::isfinite(duration) && duration >= 0.0))
    throw ValidationError("duration: must be finite and >= 0");
  GridSpinor out = state;
  out.t = state.t + duration;
  if (duration == 0.0) return out;

  const int n = state.grid.points;
  const RVector k = detail::wavenumbers(n, state.grid.spacing());
  CMatrix propagator(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      propagator(i, j) = std::exp(-kI * (0.5 * p.A * (k(i) * k(i) + k(j) * k(j)) * duration));

  for (CMatrix* comp : {&out.up, &out.down}) {
    detail::fft2(*comp, false);
    comp->array() *= propagator.array();
    detail::fft2(*comp, true);
  }
  out.truncation_warning = state.truncation_warning || boundary_population(out) > 1e-3;
  return out;
}

/// Exact run for one initial spin: RK4 through the magnet, then (optionally)
/// the free drift t_d. The grid state is stored in final_grid.
inline EvolutionRecord evolve_and_drift(const SimParams& p, Spin m0, bool drift, int stride = 20) {
  EvolutionRecord rec = evolve_in_magnet(initial_state(p, m0), p, stride);
  GridSpinor g = coeffs_to_grid(rec.final, p);
  if (drift) g = free_drift(g, drift_time(p), p);
  rec.final_grid = std::move(g);
  return rec;
}

}  // namespace sgwave
