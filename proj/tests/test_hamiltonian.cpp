#include <gtest/gtest.h>

#include <cmath>

#include "pesin_lab.hpp"

using namespace pesin_lab;

namespace {

HamiltonianSystem ham(const char* name) { return *builtin(name).hamiltonian; }

const Vec kQuarticStart = (Vec(4) << 1.2, -0.4, 0.3, 0.9).finished();

}  // namespace

TEST(Hamiltonian, OmegaIdentity) {
  EXPECT_LE(omega_identity_residual(ham("harmonic4"), 100, 1), 1e-10);
  EXPECT_LE(omega_identity_residual(ham("coupled_quartic4"), 100, 1), 1e-10);
}

TEST(Hamiltonian, EnergyConservation) {
  const IntegratorOptions o = hamiltonian_integrator_options();
  const HamiltonianSystem h = ham("harmonic4");
  const Vec x = (Vec(4) << 0.5, -0.3, 0.8, 0.1).finished();
  EXPECT_LT(std::abs(h.energy(flow(h.field(), x, 1000.0, o).position) - h.energy(x)), 1e-8);

  const HamiltonianSystem q = ham("coupled_quartic4");
  const double e0 = q.energy(kQuarticStart);
  double drift = 0.0;
  Vec y = kQuarticStart;
  for (int k = 0; k < 100; ++k) {
    y = flow(q.field(), y, 10.0, o).position;
    drift = std::max(drift, std::abs(q.energy(y) - e0));
  }
  EXPECT_LE(drift, 1e-6);
}

TEST(LevelSampling, HarmonicLevelsAreSpheres) {
  const HamiltonianSystem h = ham("harmonic4");
  const EnergyLevelSample s = sample_level(h, 2.0, 64, 5);
  EXPECT_EQ(s.points.size(), 64u);
  EXPECT_TRUE(s.regular);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    EXPECT_NEAR(s.points[i].norm(), 2.0, 1e-8);
    EXPECT_NEAR(s.weights[i], 1.0, 1e-6);
  }
}

TEST(LevelSampling, QuarticLevel) {
  const HamiltonianSystem q = ham("coupled_quartic4");
  const EnergyLevelSample s = sample_level(q, 10.0, 32, 3);
  EXPECT_TRUE(s.regular);
  double wsum = 0.0;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    EXPECT_LE(std::abs(q.energy(s.points[i]) - 10.0), 1e-9);
    EXPECT_GT(s.weights[i], 0.0);
    wsum += s.weights[i];
  }
  EXPECT_NEAR(wsum, static_cast<double>(s.points.size()), 1e-9);
}

TEST(LevelSampling, EmptyLevel) {
  try {
    sample_level(ham("harmonic4"), -1.0, 4, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLevel);
  }
}

TEST(Transversal, CocycleIsSymplectic) {
  const HamiltonianSystem q = ham("coupled_quartic4");
  const PoincareCocycle p0 = transversal_poincare(q, kQuarticStart, 0.0);
  EXPECT_LT((p0.matrix - Mat::Identity(2, 2)).norm(), 1e-12);
  const PoincareCocycle p = transversal_poincare(q, kQuarticStart, 10.0, hamiltonian_integrator_options());
  EXPECT_NEAR(p.matrix.determinant(), 1.0, 1e-6);
  EXPECT_NEAR(symplectic_form(p.start.vectors.col(0), p.start.vectors.col(1)), 1.0, 1e-12);

  const HamiltonianSystem h = ham("harmonic4");
  const PoincareCocycle r = transversal_poincare(h, (Vec(4) << 0.5, -0.3, 0.8, 0.1).finished(), 10.0);
  const Eigen::JacobiSVD<Mat> svd(r.matrix);
  EXPECT_NEAR(svd.singularValues()[0], 1.0, 1e-8);
  EXPECT_NEAR(svd.singularValues()[1], 1.0, 1e-8);
}

TEST(Transversal, SegmentedDeterminant) {
  const HamiltonianSystem q = ham("coupled_quartic4");
  const LiouvilleReport r = transversal_determinant(q, kQuarticStart, 100.0);
  EXPECT_EQ(r.segments, 100u);
  EXPECT_LT(r.error, 1e-6);
  // Chain rule: the segmented value agrees with the direct product while it is well conditioned.
  const LiouvilleReport s = transversal_determinant(q, kQuarticStart, 5.0);
  EXPECT_NEAR(s.det, s.det_product, 1e-8);
}

TEST(Transversal, CriticalPoint) {
  try {
    transversal_frame(ham("harmonic4"), Vec::Zero(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CriticalLevel);
  }
}

TEST(Transversal, SpectrumPairs) {
  const TransversalSpectrum s = transversal_spectrum(ham("coupled_quartic4"), kQuarticStart, 200.0);
  EXPECT_NEAR(s.lambda1 + s.lambda2, 0.0, 1e-6);
  EXPECT_LE(s.energy_drift, 1e-6);
}

TEST(LevelExponent, HarmonicIsZero) {
  const IntegratedExponent e = level_exponent(ham("harmonic4"), 1.0, 8, 100.0, 1);
  EXPECT_LE(e.value, 1e-4);
  EXPECT_EQ(e.method, IntegratedExponent::Method::LevelTransversal);
}

TEST(LevelExponent, QuarticGrowsWithEnergy) {
  const HamiltonianSystem q = ham("coupled_quartic4");
  const IntegratedExponent lo = level_exponent(q, 0.01, 8, 100.0, 1);
  const IntegratedExponent hi = level_exponent(q, 50.0, 8, 100.0, 1);
  EXPECT_GT(hi.value, lo.value + 3.0 * std::hypot(hi.std_error, lo.std_error));
}

TEST(LevelIntegral, Harmonic) {
  const LevelIntegral li = integrated_level_entropy(ham("harmonic4"), {0.5, 1.0, 2.0, 4.0}, {8, 100.0, 1});
  EXPECT_NEAR(li.value, 0.0, 1e-3);
  EXPECT_EQ(li.levels.size(), 4u);
  const LevelIntegral one = integrated_level_entropy(ham("coupled_quartic4"), {5.0}, {4, 20.0, 1});
  EXPECT_EQ(one.value, 0.0);
  EXPECT_THROW(integrated_level_entropy(ham("harmonic4"), {2.0, 1.0}, {}), Error);
}

TEST(LevelIntegral, QuarticGridRefinement) {
  const HamiltonianSystem q = ham("coupled_quartic4");
  const LevelIntegral coarse = integrated_level_entropy(q, {1.0, 13.25, 25.5, 37.75, 50.0}, {16, 100.0, 2});
  const LevelIntegral fine = integrated_level_entropy(
      q, {1.0, 7.125, 13.25, 19.375, 25.5, 31.625, 37.75, 43.875, 50.0}, {16, 100.0, 2});
  EXPECT_NEAR(coarse.value, fine.value, 0.1 * fine.value);
}
