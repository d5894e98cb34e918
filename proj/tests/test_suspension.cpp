#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "pesin_lab.hpp"

using namespace pesin_lab;

namespace {

const double kLogLambda = std::log((3.0 + std::sqrt(5.0)) / 2.0);

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

BaseSystem doubling_base() {
  BaseSystem b;
  b.name = "doubling";
  b.state_space = Domain::torus(1, 1.0);
  b.map = [](const Vec& x) {
    Vec y = 2.0 * x;
    y[0] -= std::floor(y[0]);
    return y;
  };
  b.sampler = [](Rng& rng) { return Vec::Constant(1, uniform01(rng)); };
  return b;
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(Ceiling, Parsing) {
  EXPECT_DOUBLE_EQ(parse_ceiling("const:2").alpha, 2.0);
  const Ceiling c = parse_ceiling("cosine:1.5,0.5");
  EXPECT_DOUBLE_EQ(c.alpha, 1.0);
  EXPECT_DOUBLE_EQ(c.h_max, 2.0);
  EXPECT_DOUBLE_EQ(c.h(v2(0.5, 0.3)), 1.0);
  EXPECT_EQ(code_of([] { parse_ceiling("const:0"); }), ErrorCode::NonPositiveCeiling);
  EXPECT_EQ(code_of([] { parse_ceiling("const:-1"); }), ErrorCode::NonPositiveCeiling);
  EXPECT_EQ(code_of([] { parse_ceiling("cosine:1,1"); }), ErrorCode::NonPositiveCeiling);
  EXPECT_EQ(code_of([] { parse_ceiling("const:abc"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_ceiling("linear:1"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_ceiling("2"); }), ErrorCode::InvalidArgument);
}

TEST(Suspension, SemigroupProperty) {
  const SuspensionSystem s = suspend(cat_base(), parse_ceiling("cosine:1,0.4"));
  const SuspensionPoint p{v2(0.31, 0.77), 0.2};
  const SuspensionPoint a = evolve(s, evolve(s, p, 1.3), 2.45);
  const SuspensionPoint b = evolve(s, p, 3.75);
  EXPECT_LT((a.base_point - b.base_point).norm(), 1e-9);
  EXPECT_NEAR(a.height, b.height, 1e-9);
  EXPECT_GE(b.height, 0.0);
  EXPECT_LT(b.height, s.ceiling().h(b.base_point));
}

TEST(Suspension, BackwardTimeInvertsForwardTime) {
  const SuspensionSystem s = suspend(cat_base(), parse_ceiling("cosine:1,0.4"));
  const SuspensionPoint p{v2(0.12, 0.58), 0.4};
  const SuspensionPoint q = evolve(s, evolve(s, p, 5.0), -5.0);
  EXPECT_LT((q.base_point - p.base_point).norm(), 1e-9);
  EXPECT_NEAR(q.height, p.height, 1e-9);
}

TEST(Suspension, ConstantCeilingStepsTheBaseMap) {
  const SuspensionSystem s = suspend(cat_base(), Ceiling::constant(1.0));
  const SuspensionPoint q = evolve(s, {v2(0.25, 0.125), 0.0}, 1.0);
  EXPECT_NEAR(q.base_point[0], 0.625, 1e-15);
  EXPECT_NEAR(q.base_point[1], 0.375, 1e-15);
  EXPECT_EQ(q.height, 0.0);
}

TEST(Suspension, SemiflowRejectsNegativeTime) {
  const SuspensionSystem s = suspend(doubling_base(), Ceiling::constant(1.0));
  EXPECT_FALSE(s.is_flow());
  EXPECT_NO_THROW(evolve(s, {Vec::Constant(1, 0.3), 0.5}, 4.0));
  EXPECT_EQ(code_of([&] { evolve(s, {Vec::Constant(1, 0.3), 0.5}, -1.0); }), ErrorCode::NotInvertible);
  EXPECT_EQ(code_of([&] { evolve(s, {Vec::Constant(1, 0.3), 1.5}, 1.0); }), ErrorCode::InvalidArgument);
}

TEST(Suspension, CeilingIntegral) {
  // The cosine term integrates to zero over the invariant Lebesgue measure.
  const SuspensionSystem s = suspend(cat_base(), parse_ceiling("cosine:2,1"));
  EXPECT_NEAR(s.integral_estimate(), 2.0, 5.0 * s.integral_stderr());
  EXPECT_EQ(suspend(cat_base(), Ceiling::constant(2.0)).integral_estimate(), 2.0);
}

TEST(Suspension, AbramovFormula) {
  EXPECT_NEAR(abramov_check(suspend(cat_base(), Ceiling::constant(2.0)), kLogLambda), kLogLambda / 2.0, 1e-15);
  EXPECT_NEAR(abramov_check(suspend(cat_base(), Ceiling::constant(1.0)), kLogLambda), kLogLambda, 1e-15);
}

TEST(Suspension, LiftedMeasureSamples) {
  const SuspensionSystem s = suspend(cat_base(), parse_ceiling("cosine:1,0.5"));
  const auto pts = lift_measure_sample(s, 9, 2000);
  ASSERT_EQ(pts.size(), 2000u);
  double mean_x = 0.0;
  for (const auto& p : pts) {
    EXPECT_GE(p.height, 0.0);
    EXPECT_LT(p.height, s.ceiling().h(p.base_point));
    mean_x += std::cos(2.0 * std::numbers::pi * p.base_point[0]);
  }
  // Base marginal has density h / int h, so E[cos 2 pi x] = 0.5 / (2 * 1).
  EXPECT_NEAR(mean_x / 2000.0, 0.25, 0.05);
  const auto again = lift_measure_sample(s, 9, 2000);
  EXPECT_EQ(again.back().base_point, pts.back().base_point);
}

TEST(Expansivity, CatSeparatesRotationAndIdentityDoNot) {
  EXPECT_DOUBLE_EQ(expansivity_probe(cat_base(), 0.1, 100, 50, 1).fraction, 1.0);
  EXPECT_DOUBLE_EQ(expansivity_probe(rotation_base(), 0.1, 100, 50, 1).fraction, 0.0);
  EXPECT_DOUBLE_EQ(expansivity_probe(identity_base(), 0.1, 100, 50, 1).fraction, 0.0);
  EXPECT_EQ(code_of([] { expansivity_probe(doubling_base(), 0.1, 10, 5, 1); }), ErrorCode::NotInvertible);
}

TEST(BaseMaps, CatInverseAndKnownEntropy) {
  const BaseSystem cat = cat_base();
  ASSERT_TRUE(cat.invertible());
  const Vec x = v2(0.137, 0.911);
  EXPECT_LT(((*cat.inverse)(cat.map(x)) - x).norm(), 1e-14);
  ASSERT_TRUE(cat.known_entropy.has_value());
  EXPECT_NEAR(*cat.known_entropy, kLogLambda, 1e-15);
  EXPECT_EQ(code_of([] { base_by_name("baker"); }), ErrorCode::UnknownSystem);
}
