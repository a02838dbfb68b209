#pragma once

// Beam polarisation from the detected pattern: the density is linear in the
// polarisation vector, P = P0 + (p_x A_x + p_y A_y + p_z A_z) / 2.

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sgwave/observables.hpp"

namespace sgwave {

struct AsymmetryBasis {
  GridMap p0;
  GridMap ax;
  GridMap ay;
  GridMap az;

  static AsymmetryBasis from(const GridMap& p0, const AsymmetryMaps& maps) {
    return {p0, maps.ax, maps.ay, maps.az};
  }
};

inline void validate(const AsymmetryBasis& b) {
  for (const GridMap* m : {&b.ax, &b.ay, &b.az})
    if (!(m->grid == b.p0.grid)) throw ValidationError("asymmetry basis: maps do not share one grid");
  if (b.p0.values.minCoeff() < -1e-12) throw ValidationError("asymmetry basis: P0 has negative values");
  const RMatrix bound = 2.0 * b.p0.values.array() + 1e-8;
  for (const GridMap* m : {&b.ax, &b.ay, &b.az})
    if (((m->values.cwiseAbs() - bound).array() > 0.0).any())
      throw ValidationError("asymmetry basis: |A_i| exceeds 2 P0");
}

inline GridMap predicted_density(const AsymmetryBasis& b, const PolarizationVector& p) {
  if (p.magnitude() > 1.0 + 1e-12) throw ValidationError("polarization: |p| must be <= 1");
  return {b.p0.grid, b.p0.values + 0.5 * (p.px * b.ax.values + p.py * b.ay.values + p.pz * b.az.values)};
}

struct PolarizationFit {
  PolarizationVector p;
  double residual = 0.0;          ///< sum over grid points of (observed - fitted)^2
  double condition_number = 0.0;  ///< of the normal matrix
  bool scale_fitted = false;      ///< observed map was not normalized
  double scale = 1.0;             ///< fitted overall intensity
  bool unphysical = false;        ///< |p| > 1, a symptom of noise
};

inline constexpr double kDegenerateCondition = 1e8;
inline constexpr double kNormalizedTolerance = 1e-3;

/// Unweighted least squares over grid points. A normalized map fits the
/// three polarisation components; otherwise an overall scale is fitted too.
inline PolarizationFit reconstruct_polarization(const GridMap& observed, const AsymmetryBasis& b) {
  if (!(observed.grid == b.p0.grid)) throw ValidationError("observed: grid does not match the basis");
  const Eigen::Index n = observed.values.size();
  auto flat = [](const RMatrix& m) { return Eigen::Map<const RVector>(m.data(), m.size()); };

  PolarizationFit fit;
  fit.scale_fitted = std::abs(observed.integral() - 1.0) > kNormalizedTolerance;
  const int k = fit.scale_fitted ? 4 : 3;
  RMatrix design(n, k);
  RVector target = flat(observed.values);
  int col = 0;
  if (fit.scale_fitted) design.col(col++) = flat(b.p0.values);
  else target -= flat(b.p0.values);
  design.col(col++) = 0.5 * flat(b.ax.values);
  design.col(col++) = 0.5 * flat(b.ay.values);
  design.col(col++) = 0.5 * flat(b.az.values);

  const RMatrix normal = design.transpose() * design;
  const RVector eig = Eigen::SelfAdjointEigenSolver<RMatrix>(normal, Eigen::EigenvaluesOnly).eigenvalues();
  fit.condition_number = eig(0) > 0.0 ? eig(k - 1) / eig(0) : std::numeric_limits<double>::infinity();
  if (!(fit.condition_number <= kDegenerateCondition)) {
    std::string weak;
    const std::array<const char*, 3> names = {"p_x", "p_y", "p_z"};
    const double largest = design.colwise().norm().maxCoeff();
    for (int i = 0; i < 3; ++i)
      if (design.col(k - 3 + i).norm() <= 1e-4 * largest) weak += (weak.empty() ? "" : ", ") + std::string(names[i]);
    throw DegenerateBasisError("degenerate asymmetry basis (condition number " +
                               std::to_string(fit.condition_number) + "); no information on " +
                               (weak.empty() ? std::string("a combination of components") : weak));
  }

  const RVector q = design.colPivHouseholderQr().solve(target);
  if (fit.scale_fitted) {
    fit.scale = q(0);
    if (fit.scale == 0.0) throw NumericalError("polarisation fit: fitted intensity is zero");
    fit.p = {q(1) / q(0), q(2) / q(0), q(3) / q(0)};
  } else {
    fit.p = {q(0), q(1), q(2)};
  }
  fit.residual = (design * q - target).squaredNorm();
  fit.unphysical = fit.p.magnitude() > 1.0;
  return fit;
}

}  // namespace sgwave
