#pragma once

// Closed-form approximations to the evolution operator, all built on the
// fact that exp(i t S rho I_B) conserves the spin projection along the local
// field. Each returns the physical spinor at time t on the params grid, in
// the same frame as coeffs_to_grid of the exact solution.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "sgwave/core_model.hpp"
#include "sgwave/exact_evolution.hpp"

namespace sgwave {

/// Polar coordinates about the field zero at (x, z) = (0, -z0).
struct FieldFrame {
  double rho = 0.0;
  double beta = 0.0;  ///< in (-pi, pi]; 0 at the field zero itself
};

inline FieldFrame field_frame(double x, double z, double z0) {
  const double zz = z + z0;
  const double rho = std::hypot(x, zz);
  if (rho == 0.0) return {0.0, 0.0};
  double beta = std::atan2(x, zz);
  if (beta <= -std::numbers::pi) beta = std::numbers::pi;
  return {rho, beta};
}

/// d^{1/2}(beta), rows and columns ordered (+1/2, -1/2).
using SpinRotation = Eigen::Matrix2d;

inline SpinRotation wigner_d_half(double beta) {
  const double c = std::cos(beta / 2.0);
  const double s = std::sin(beta / 2.0);
  SpinRotation d;
  d << c, -s, s, c;
  return d;
}

inline int spin_index(Spin s) { return s == Spin::up ? 0 : 1; }

enum class Approximation { adiabatic, pseudo_adiabatic, coherent_state, symmetrized };

inline constexpr std::array<Approximation, 4> kAllApproximations = {
    Approximation::adiabatic, Approximation::pseudo_adiabatic, Approximation::coherent_state,
    Approximation::symmetrized};

inline const char* approximation_name(Approximation a) {
  switch (a) {
    case Approximation::adiabatic: return "adiabatic";
    case Approximation::pseudo_adiabatic: return "pseudo_adiabatic";
    case Approximation::coherent_state: return "coherent_state";
    case Approximation::symmetrized: return "symmetrized";
  }
  return "?";
}

inline Approximation approximation_from_name(const std::string& name) {
  for (Approximation a : kAllApproximations)
    if (name == approximation_name(a)) return a;
  throw ValidationError("approximation: unknown name '" + name + "'");
}

inline constexpr double kRhoFloor = 1e-9;

namespace detail {

/// psi_m(x, z) = sum_n d_nm(beta) g_n(rho, beta) d_{n m0}(beta), where
/// g(n_projection, frame, x, z) supplies the I_B-diagonal amplitude.
template <class Envelope>
GridSpinor local_field_spinor(const SimParams& p, double t, Spin m0, Envelope&& g) {
  const Grid grid = grid_of(p);
  const int M = grid.points;
  GridSpinor out{grid, CMatrix(M, M), CMatrix(M, M), t, false};
  const int j0 = spin_index(m0);
  for (int iz = 0; iz < M; ++iz) {
    const double z = grid.coord(iz);
    for (int ix = 0; ix < M; ++ix) {
      const double x = grid.coord(ix);
      const FieldFrame f = field_frame(x, z, p.z0);
      const SpinRotation d = wigner_d_half(f.beta);
      const cplx g_up = g(0.5, f, x, z);
      const cplx g_dn = g(-0.5, f, x, z);
      out.up(ix, iz) = d(0, 0) * g_up * d(0, j0) + d(1, 0) * g_dn * d(1, j0);
      out.down(ix, iz) = d(0, 1) * g_up * d(0, j0) + d(1, 1) * g_dn * d(1, j0);
    }
  }
  return out;
}

/// Freely spread ground state U0(s) phi_0 at (x, z): normalized 2-D Gaussian
/// with complex width 1 + i A s.
inline cplx spread_gaussian(double r2, double A, double s) {
  const cplx w = 1.0 + kI * (A * s);
  return std::exp(-r2 / (2.0 * w)) / (std::sqrt(std::numbers::pi) * w);
}

}  // namespace detail

/// exp(-i t v) phi_0: the Gaussian is frozen, only the I_B phase evolves.
inline GridSpinor adiabatic_wavefunction(const SimParams& p, double t, Spin m0) {
  return detail::local_field_spinor(p, t, m0, [&](double n, const FieldFrame& f, double x, double z) {
    return detail::spread_gaussian(x * x + z * z, 0.0, 0.0) * std::exp(kI * (n * f.rho * p.S * t));
  });
}

/// exp(-i t v) U0(t) phi_0.
inline GridSpinor pseudo_adiabatic_wavefunction(const SimParams& p, double t, Spin m0) {
  return detail::local_field_spinor(p, t, m0, [&](double n, const FieldFrame& f, double x, double z) {
    return detail::spread_gaussian(x * x + z * z, p.A, t) * std::exp(kI * (n * f.rho * p.S * t));
  });
}

/// Coherent internal states: each I_B component of the spread Gaussian is
/// displaced radially to rho_n = rho - n A S t^2 / 2, with the sqrt(rho_n/rho)
/// Jacobian and the global phase exp(i A S^2 t^3 / 12).
inline GridSpinor coherent_state_wavefunction(const SimParams& p, double t, Spin m0) {
  const cplx global = std::exp(kI * (p.A * p.S * p.S * t * t * t / 12.0));
  return detail::local_field_spinor(p, t, m0, [&](double n, const FieldFrame& f, double, double) {
    const double rho_n = f.rho - n * p.A * p.S * t * t / 2.0;
    if (rho_n <= 0.0) return cplx{0.0};
    const double rho = std::max(f.rho, kRhoFloor);
    // |r - r_centre|^2 at the displaced radius and the same angle
    const double r2 = rho_n * rho_n - 2.0 * rho_n * p.z0 * std::cos(f.beta) + p.z0 * p.z0;
    return global * std::exp(kI * (n * f.rho * p.S * t)) * std::sqrt(rho_n / rho) *
           detail::spread_gaussian(r2, p.A, t);
  });
}

/// exp(i t S rho I_B) U0(t/2) phi_0: the symmetrized state right after the
/// interaction factor, before the outer half drift.
inline GridSpinor symmetrized_interaction_wavefunction(const SimParams& p, double t, Spin m0) {
  return detail::local_field_spinor(p, t, m0, [&](double n, const FieldFrame& f, double x, double z) {
    return detail::spread_gaussian(x * x + z * z, p.A, t / 2.0) * std::exp(kI * (n * f.rho * p.S * t));
  });
}

/// exp(i A S^2 t^3 / 24) U0(t/2) exp(i t S rho I_B) U0(t/2) phi_0.
inline GridSpinor symmetrized_wavefunction(const SimParams& p, double t, Spin m0) {
  GridSpinor half = symmetrized_interaction_wavefunction(p, t, m0);
  GridSpinor out = free_drift(half, t / 2.0, p);
  const cplx global = std::exp(kI * (p.A * p.S * p.S * t * t * t / 24.0));
  out.up *= global;
  out.down *= global;
  out.t = t;
  return out;
}

inline GridSpinor approximate_wavefunction(Approximation kind, const SimParams& p, double t, Spin m0) {
  switch (kind) {
    case Approximation::adiabatic: return adiabatic_wavefunction(p, t, m0);
    case Approximation::pseudo_adiabatic: return pseudo_adiabatic_wavefunction(p, t, m0);
    case Approximation::coherent_state: return coherent_state_wavefunction(p, t, m0);
    case Approximation::symmetrized: return symmetrized_wavefunction(p, t, m0);
  }
  throw ValidationError("approximation: unknown kind");
}

/// Components of a spinor along the local field: (I_B = +1/2, I_B = -1/2)
/// amplitudes sum_m d_nm(beta) psi_m at each grid point.
struct LocalFieldComponents {
  CMatrix along;
  CMatrix against;
};

inline LocalFieldComponents local_field_components(const GridSpinor& g, double z0) {
  const int M = g.grid.points;
  LocalFieldComponents out{CMatrix(M, M), CMatrix(M, M)};
  for (int iz = 0; iz < M; ++iz) {
    for (int ix = 0; ix < M; ++ix) {
      const FieldFrame f = field_frame(g.grid.coord(ix), g.grid.coord(iz), z0);
      const SpinRotation d = wigner_d_half(f.beta);
      out.along(ix, iz) = d(0, 0) * g.up(ix, iz) + d(0, 1) * g.down(ix, iz);
      out.against(ix, iz) = d(1, 0) * g.up(ix, iz) + d(1, 1) * g.down(ix, iz);
    }
  }
  return out;
}

}  // namespace sgwave
