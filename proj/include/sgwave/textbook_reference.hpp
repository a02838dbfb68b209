#pragma once

// Textbook baselines: spin projection along z conserved, a constant force
// S m on each component.

#include "sgwave/core_model.hpp"

namespace sgwave {

/// z_m(t) = (S A) m t^2 / 2 inside the magnet.
inline double textbook_trajectory(double t, double m, const SimParams& p) {
  return 0.5 * p.S * p.A * m * t * t;
}

/// z_m = (1/2 + t_d) S A m after a drift t_d beyond the magnet exit.
inline double textbook_drift_position(double t_d, double m, const SimParams& p) {
  return (0.5 + t_d) * p.S * p.A * m;
}

/// Small-angle estimate <sin^2 beta> / 2 = 1 / (4 z0^2) of the spin-flip
/// probability.
inline double semiclassical_spin_flip(double z0) {
  if (!(z0 > 0.0)) throw ValidationError("z0: must be > 0");
  return 1.0 / (4.0 * z0 * z0);
}

}  // namespace sgwave
