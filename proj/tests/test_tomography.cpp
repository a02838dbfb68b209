#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sgwave/exact_evolution.hpp"
#include "sgwave/tomography.hpp"

using namespace sgwave;

namespace {

AsymmetryBasis basis_for(const SimParams& p) {
  const RunPair pair{*evolve_and_drift(p, Spin::up, true).final_grid, *evolve_and_drift(p, Spin::down, true).final_grid};
  return AsymmetryBasis::from(probability_density(pair), asymmetry_maps(pair));
}

const AsymmetryBasis& reference_basis() {
  static const AsymmetryBasis b = basis_for(SimParams::with_defaults(0.5, 4, 4));
  return b;
}

PolarizationVector random_polarization(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d v(g(rng), g(rng), g(rng));
  v *= std::cbrt(u(rng)) / v.norm();
  return {v.x(), v.y(), v.z()};
}

GridMap add_noise(GridMap m, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] += amplitude * u(rng);
  return m;
}

}  // namespace

TEST(PredictedDensity, Values) {
  const AsymmetryBasis& b = reference_basis();
  EXPECT_EQ((predicted_density(b, {0, 0, 0}).values - b.p0.values).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((predicted_density(b, {0, 0, 1}).values - (b.p0.values + 0.5 * b.az.values)).cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_THROW(predicted_density(b, {0.8, 0.0, 0.8}), ValidationError);
}

TEST(PredictedDensity, NormalizedForEveryPolarization) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(predicted_density(reference_basis(), random_polarization(rng)).integral(), 1.0, 1e-4);
}

TEST(Basis, Validates) {
  EXPECT_NO_THROW(validate(reference_basis()));
  AsymmetryBasis broken = reference_basis();
  broken.ax.values(100, 100) = 3.0 * broken.p0.values(100, 100) + 1.0;
  EXPECT_THROW(validate(broken), ValidationError);
}

TEST(Reconstruct, PureStatesRoundTrip) {
  const AsymmetryBasis& b = reference_basis();
  for (PolarizationVector p : {PolarizationVector{0, 0, 1}, PolarizationVector{1, 0, 0}, PolarizationVector{0, -1, 0}}) {
    const PolarizationFit fit = reconstruct_polarization(predicted_density(b, p), b);
    EXPECT_FALSE(fit.scale_fitted);
    EXPECT_NEAR(fit.p.px, p.px, 1e-8);
    EXPECT_NEAR(fit.p.py, p.py, 1e-8);
    EXPECT_NEAR(fit.p.pz, p.pz, 1e-8);
    EXPECT_LT(fit.residual, 1e-20);
  }
}

TEST(Reconstruct, RandomPolarizationsRoundTrip) {
  const AsymmetryBasis& b = reference_basis();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PolarizationVector p = random_polarization(rng);
    const PolarizationFit fit = reconstruct_polarization(predicted_density(b, p), b);
    worst = std::max({worst, std::abs(fit.p.px - p.px), std::abs(fit.p.py - p.py), std::abs(fit.p.pz - p.pz)});
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Reconstruct, ToleratesSmallNoise) {
  const AsymmetryBasis& b = reference_basis();
  const PolarizationVector p{0.6, 0.0, 0.8};
  const GridMap observed = add_noise(predicted_density(b, p), 1e-3 * b.p0.values.maxCoeff(), 99);
  const PolarizationFit fit = reconstruct_polarization(observed, b);
  EXPECT_NEAR(fit.p.px, 0.6, 0.05);
  EXPECT_NEAR(fit.p.py, 0.0, 0.05);
  EXPECT_NEAR(fit.p.pz, 0.8, 0.05);
}

TEST(Reconstruct, FitsIntensityOfUnnormalizedMaps) {
  const AsymmetryBasis& b = reference_basis();
  const PolarizationVector p{0.3, -0.2, 0.5};
  GridMap counts = predicted_density(b, p);
  counts.values *= 250.0;
  const PolarizationFit fit = reconstruct_polarization(counts, b);
  EXPECT_TRUE(fit.scale_fitted);
  EXPECT_NEAR(fit.scale, 250.0, 1e-6);
  EXPECT_NEAR(fit.p.px, p.px, 1e-8);
  EXPECT_NEAR(fit.p.py, p.py, 1e-8);
  EXPECT_NEAR(fit.p.pz, p.pz, 1e-8);
}

TEST(Reconstruct, FlagsUnphysicalResult) {
  const AsymmetryBasis& b = reference_basis();
  GridMap observed = b.p0;
  observed.values += 0.5 * 1.5 * b.az.values;
  const PolarizationFit fit = reconstruct_polarization(observed, b);
  EXPECT_NEAR(fit.p.pz, 1.5, 1e-8);
  EXPECT_TRUE(fit.unphysical);
}

TEST(Reconstruct, TextbookBasisIsDegenerate) {
  SimParams p = SimParams::with_defaults(0.5, 4, 4);
  p.textbook_mode = true;
  const AsymmetryBasis b = basis_for(p);
  EXPECT_EQ(b.ax.values.cwiseAbs().maxCoeff(), 0.0);
  try {
    reconstruct_polarization(predicted_density(b, {0, 0, 1}), b);
    FAIL() << "expected DegenerateBasisError";
  } catch (const DegenerateBasisError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("p_x"), std::string::npos);
    EXPECT_NE(msg.find("p_y"), std::string::npos);
  }
}

TEST(Reconstruct, RejectsGridMismatch) {
  SimParams p = SimParams::with_defaults(0.5, 4, 4);
  const AsymmetryBasis& b = reference_basis();
  GridMap other{Grid{p.grid_extent, 128}, RMatrix::Zero(128, 128)};
  EXPECT_THROW(reconstruct_polarization(other, b), ValidationError);
}

TEST(Reconstruct, TransverseErrorGrowsWithOffset) {
  // A_x shrinks as z0 grows, so the same relative noise costs more in p_x
  const PolarizationVector p{0.6, 0.0, 0.8};
  std::vector<double> rms;
  for (double z0 : {3.0, 4.0, 8.0}) {
    const AsymmetryBasis b = basis_for(SimParams::with_defaults(0.5, 4, z0));
    const GridMap clean = predicted_density(b, p);
    double sum = 0.0;
    const int trials = 20;
    for (int s = 0; s < trials; ++s) {
      const PolarizationFit fit =
          reconstruct_polarization(add_noise(clean, 1e-3 * b.p0.values.maxCoeff(), 500 + s), b);
      sum += std::pow(fit.p.px - p.px, 2);
    }
    rms.push_back(std::sqrt(sum / trials));
  }
  EXPECT_LT(rms[0], rms[1]);
  EXPECT_LT(rms[1], rms[2]);
}
