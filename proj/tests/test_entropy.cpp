#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pesin_lab.hpp"

using namespace pesin_lab;

namespace {

const double kLogLambda = std::log((3.0 + std::sqrt(5.0)) / 2.0);
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

// Exact H(P^(n)) for a circle rotation and the partition into k equal arcs:
// the n-cylinders are the arcs cut out by the points j/k - i*alpha, i < n.
double rotation_cylinder_entropy(double alpha, int k, int n) {
  std::vector<double> cuts;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      double c = static_cast<double>(j) / k - i * alpha;
      cuts.push_back(c - std::floor(c));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double h = 0.0;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double len = (i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + 1.0) - cuts[i];
    if (len > 0.0) h -= len * std::log(len);
  }
  return h;
}

MapSystem circle() {
  return map_system(rotation_base(Vec::Constant(1, kGolden)));
}

}  // namespace

TEST(PartitionGrid, CellIndexing) {
  const PartitionGrid g({4, 2}, Domain::torus(2, 1.0));
  EXPECT_EQ(g.cells(), 8u);
  EXPECT_EQ(g.cell((Vec(2) << 0.0, 0.0).finished()), 0u);
  EXPECT_EQ(g.cell((Vec(2) << 0.3, 0.7).finished()), 3u);
  EXPECT_EQ(g.cell((Vec(2) << 0.99, 0.99).finished()), 7u);
  EXPECT_EQ(g.cell((Vec(2) << 1.5, -0.5).finished()), 6u);
  EXPECT_THROW(PartitionGrid({4}, Domain::torus(2, 1.0)), Error);
}

TEST(Entropy, IdentityMapIsZero) {
  const EntropyEstimate e = refined_entropy(map_system(identity_base()), PartitionGrid({8, 8}, Domain::torus(2, 1.0)),
                                            8, 100, 1000, 3);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.bias_bound, e.diagnostics[e.n_depth - 1].h_n_over_n);
}

TEST(Entropy, CatMapWithinTenPercent) {
  const EntropyEstimate e =
      refined_entropy(map_system(cat_base()), PartitionGrid({16, 16}, Domain::torus(2, 1.0)), 10, 100, 10000, 1);
  EXPECT_NEAR(e.value, kLogLambda, 0.1 * kLogLambda);
  EXPECT_GT(e.n_depth, 1);
  EXPECT_GT(e.std_error, 0.0);
  for (const auto& l : e.diagnostics) EXPECT_GE(l.h_n_over_n + 1e-12, kLogLambda * 0.9) << "n=" << l.n;
}

TEST(Entropy, CircleRotationMatchesExactCylinderEntropy) {
  const int k = 8, n_max = 10;
  const EntropyEstimate e = refined_entropy(circle(), PartitionGrid({k}, Domain::torus(1, 1.0)), n_max, 50, 4000, 2);
  for (const auto& l : e.diagnostics) {
    EXPECT_NEAR(l.h_n, rotation_cylinder_entropy(kGolden, k, l.n), 0.01) << "n=" << l.n;
  }
  const double exact = rotation_cylinder_entropy(kGolden, k, e.n_depth) -
                       rotation_cylinder_entropy(kGolden, k, e.n_depth - 1);
  EXPECT_NEAR(e.value, exact, 0.02);
}

TEST(Entropy, SubadditiveCylinderEntropies) {
  const EntropyEstimate e =
      refined_entropy(map_system(cat_base()), PartitionGrid({8, 8}, Domain::torus(2, 1.0)), 6, 50, 4000, 4);
  const auto& d = e.diagnostics;
  for (int a = 1; a <= 6; ++a) {
    for (int b = 1; a + b <= 6; ++b) EXPECT_LE(d[a + b - 1].h_n, d[a - 1].h_n + d[b - 1].h_n + 0.01);
  }
}

TEST(Entropy, TooFewSamples) {
  try {
    refined_entropy(map_system(cat_base()), PartitionGrid({64, 64}, Domain::torus(2, 1.0)), 10, 2, 100, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
  EXPECT_THROW(refined_entropy(circle(), PartitionGrid({8}, Domain::torus(1, 1.0)), 10, 1, 5, 1), Error);
  try {
    // Only depth 1 is resolved: 4000 windows against thousands of 2-cylinders.
    refined_entropy(map_system(cat_base()), PartitionGrid({20, 20}, Domain::torus(2, 1.0)), 4, 8, 500, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
}

TEST(Entropy, DeterministicAcrossThreads) {
  const PartitionGrid g({8, 8}, Domain::torus(2, 1.0));
  const EntropyEstimate a = refined_entropy(map_system(cat_base()), g, 5, 16, 2000, 7, 1);
  const EntropyEstimate b = refined_entropy(map_system(cat_base()), g, 5, 16, 2000, 7, 4);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  for (std::size_t i = 0; i < a.diagnostics.size(); ++i) EXPECT_EQ(a.diagnostics[i].h_n, b.diagnostics[i].h_n);
}

TEST(FlowEntropy, ConstantFlowIsZero) {
  const System s = builtin("constant3");
  EntropyOptions o;
  o.resolution = s.entropy_resolution;
  o.n_orbits = 20;
  o.orbit_length = 500;
  const EntropyEstimate e = flow_entropy(s.field, o);
  EXPECT_NEAR(e.value, 0.0, 0.05);
}

TEST(FlowEntropy, SuspensionTimeScaling) {
  const SuspensionSystem s = suspend(cat_base(), Ceiling::constant(2.0));
  EntropyOptions o;
  o.resolution = {16, 16, 2};
  o.n_orbits = 50;
  o.orbit_length = 10000;
  const EntropyEstimate e = flow_entropy(s, o);
  EXPECT_NEAR(e.value, kLogLambda / 2.0, 0.1 * kLogLambda / 2.0);
  const EntropyEstimate t = abramov_transfer(s, EntropyOptions{{16, 16}, std::nullopt, 1.0, 10, 100, 10000});
  EXPECT_EQ(t.method, EntropyEstimate::Method::AbramovTransfer);
  EXPECT_NEAR(t.value, kLogLambda / 2.0, 0.1 * kLogLambda / 2.0);
}

TEST(Pesin, ZeroFieldReportsNothing) {
  EntropyOptions eo;
  eo.resolution = {4, 4, 4};
  eo.n_orbits = 10;
  eo.orbit_length = 200;
  eo.n_max = 4;
  LyapunovOptions lo;
  lo.n_samples = 4;
  lo.t_horizon = 10.0;
  const PesinReport r = pesin_report(zero_field(3), eo, lo);
  EXPECT_EQ(r.h_est, 0.0);
  EXPECT_EQ(r.lambda_est, 0.0);
  EXPECT_EQ(r.difference, 0.0);
  EXPECT_FALSE(r.violation);
}
