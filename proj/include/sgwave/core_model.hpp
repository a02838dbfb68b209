#pragma once

// Domain types shared by every module: dimensionless parameters, the
// coefficient and grid representations of a spin-1/2 packet in the (x, z)
// plane, and the conversion from physical units.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "sgwave/errors.hpp"

namespace sgwave {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

// ---------------------------------------------------------------------------
// Spin projections along z.

enum class Spin { up, down };

/// +1/2 for up, -1/2 for down.
constexpr double projection(Spin s) { return s == Spin::up ? 0.5 : -0.5; }

constexpr Spin opposite(Spin s) { return s == Spin::up ? Spin::down : Spin::up; }

inline Spin spin_from_projection(double m) {
  if (m == 0.5) return Spin::up;
  if (m == -0.5) return Spin::down;
  throw ValidationError("m0: spin projection must be +1/2 or -1/2, got " + std::to_string(m));
}

inline const char* spin_name(Spin s) { return s == Spin::up ? "up" : "down"; }

// ---------------------------------------------------------------------------
// Parameters.

/// Dimensionless simulation parameters. Lengths are in units of the packet
/// width sigma, times in units of the transit time tau.
struct SimParams {
  double A = 0.0;   ///< adiabaticity
  double S = 0.0;   ///< separation
  double z0 = 0.0;  ///< distance from the beam centre to the field zero
  int n_basis = 40;
  double grid_extent = 12.0;  ///< half-width of the square (x, z) grid
  int grid_points = 256;
  double dt = 1e-3;
  bool textbook_mode = false;  ///< drop the I_x x coupling

  /// Parameters with every optional field at its default; the grid extent
  /// follows max(3 z0, 12).
  static SimParams with_defaults(double A, double S, double z0) {
    SimParams p;
    p.A = A;
    p.S = S;
    p.z0 = z0;
    p.grid_extent = std::max(3.0 * z0, 12.0);
    return p;
  }
};

/// Half-width the grid must exceed so that both textbook lobes, which end up
/// at z = +-z0 after the drift, stay away from the boundary.
inline double minimum_grid_extent(const SimParams& p) {
  if (p.A * p.S <= 0.0) return p.z0;
  return 2.0 * p.z0 + p.A * p.S / 4.0;
}

inline void validate(const SimParams& p) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
  };
  require(std::isfinite(p.A) && p.A >= 0.0, "A: must be finite and >= 0");
  require(std::isfinite(p.S) && p.S >= 0.0, "S: must be finite and >= 0");
  require(p.A > 0.0 || p.S == 0.0, "A: must be > 0 unless S = 0");
  require(std::isfinite(p.z0) && p.z0 > 0.0, "z0: must be > 0");
  require(p.n_basis >= 2, "n_basis: must be >= 2");
  require(std::isfinite(p.dt) && p.dt > 0.0 && p.dt <= 1.0, "dt: must lie in (0, 1]");
  require(p.grid_points >= 8, "grid_points: must be >= 8");
  require(std::isfinite(p.grid_extent) && p.grid_extent > minimum_grid_extent(p),
          "grid_extent: must exceed " + std::to_string(minimum_grid_extent(p)) +
              " so deflected packets stay on the grid");
}

/// Parameters of the experiment in consistent physical units.
struct PhysicalParams {
  double mass = 0.0;
  double magnetic_moment = 0.0;
  double field = 0.0;           ///< B0 at the beam centre
  double field_gradient = 0.0;  ///< B1
  double packet_width = 0.0;    ///< sigma
  double magnet_length = 0.0;   ///< L
  double speed = 0.0;           ///< v_y

  double transit_time() const { return magnet_length / speed; }
};

inline void validate(const PhysicalParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) throw ValidationError(std::string(name) + ": must be > 0");
  };
  positive(p.mass, "mass");
  positive(p.magnetic_moment, "magnetic_moment");
  positive(p.field, "field");
  positive(p.field_gradient, "field_gradient");
  positive(p.packet_width, "packet_width");
  positive(p.magnet_length, "magnet_length");
  positive(p.speed, "speed");
}

/// A = hbar tau / (M sigma^2), S = mu B1 tau sigma / hbar, z0 = B0 / (sigma B1).
inline SimParams params_from_physical(const PhysicalParams& phys, double hbar) {
  validate(phys);
  if (!(std::isfinite(hbar) && hbar > 0.0)) throw ValidationError("hbar: must be > 0");
  const double tau = phys.transit_time();
  const double sigma = phys.packet_width;
  const double A = hbar * tau / (phys.mass * sigma * sigma);
  const double S = phys.magnetic_moment * phys.field_gradient * tau * sigma / hbar;
  const double z0 = phys.field / (sigma * phys.field_gradient);
  return SimParams::with_defaults(A, S, z0);
}

// ---------------------------------------------------------------------------
// Grid geometry.

/// Uniform square grid, identical sampling along x and z, endpoints included.
struct Grid {
  double extent = 12.0;
  int points = 256;

  double spacing() const { return 2.0 * extent / (points - 1); }
  double coord(int i) const { return -extent + i * spacing(); }

  RVector coords() const {
    RVector c(points);
    for (int i = 0; i < points; ++i) c(i) = coord(i);
    return c;
  }

  RVector trapezoid_weights() const {
    RVector w = RVector::Constant(points, spacing());
    w(0) *= 0.5;
    w(points - 1) *= 0.5;
    return w;
  }

  bool operator==(const Grid&) const = default;
};

inline Grid grid_of(const SimParams& p) { return Grid{p.grid_extent, p.grid_points}; }

/// Trapezoid-rule integral of a real field sampled on the grid.
inline double integrate(const Grid& g, const RMatrix& f) {
  const RVector w = g.trapezoid_weights();
  return w.dot(f * w);
}

/// Trapezoid-rule inner product <f|g>.
inline cplx inner(const Grid& grid, const CMatrix& f, const CMatrix& g) {
  const RVector w = grid.trapezoid_weights();
  const CMatrix prod = f.conjugate().cwiseProduct(g);
  return (w.cast<cplx>().transpose() * prod * w.cast<cplx>())(0, 0);
}

/// A real scalar field on the grid; values(ix, iz).
struct GridMap {
  Grid grid;
  RMatrix values;

  double integral() const { return integrate(grid, values); }
};

/// Spinor sampled on the grid. up(ix, iz) and down(ix, iz) are the physical
/// amplitudes of m = +1/2 and m = -1/2 along z.
struct GridSpinor {
  Grid grid;
  CMatrix up;
  CMatrix down;
  double t = 0.0;
  bool truncation_warning = false;

  const CMatrix& component(Spin s) const { return s == Spin::up ? up : down; }
  CMatrix& component(Spin s) { return s == Spin::up ? up : down; }

  RMatrix density() const { return up.cwiseAbs2() + down.cwiseAbs2(); }
  double norm() const { return integrate(grid, density()); }
};

inline cplx inner(const GridSpinor& f, const GridSpinor& g) {
  return inner(f.grid, f.up, g.up) + inner(f.grid, f.down, g.down);
}

/// Coefficients of the two spin components over the product oscillator basis
/// phi_n(x) phi_m(z), in the interaction frame that strips exp(+-i t S z0 / 2).
struct SpinorCoeffs {
  CMatrix a;  ///< m = +1/2, indexed (n, m)
  CMatrix b;  ///< m = -1/2
  double t = 0.0;

  int n_basis() const { return static_cast<int>(a.rows()); }
  double norm() const { return a.squaredNorm() + b.squaredNorm(); }
};

/// Phase carried by the up component relative to its interaction-frame
/// amplitude; the down component carries the conjugate.
inline cplx interaction_phase(double t, const SimParams& p) {
  return std::exp(kI * (t * p.S * p.z0 / 2.0));
}

/// The ground-state Gaussian pi^{-1/2} exp(-(x^2+z^2)/2) with spin m0.
inline SpinorCoeffs initial_state(const SimParams& p, Spin m0) {
  if (p.n_basis < 2) throw ValidationError("n_basis: must be >= 2");
  SpinorCoeffs c{CMatrix::Zero(p.n_basis, p.n_basis), CMatrix::Zero(p.n_basis, p.n_basis), 0.0};
  (m0 == Spin::up ? c.a : c.b)(0, 0) = 1.0;
  return c;
}

/// Beam polarisation vector.
struct PolarizationVector {
  double px = 0.0;
  double py = 0.0;
  double pz = 0.0;

  double magnitude() const { return std::sqrt(px * px + py * py + pz * pz); }
};

}  // namespace sgwave
