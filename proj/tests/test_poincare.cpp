#include <gtest/gtest.h>

#include <cmath>

#include "pesin_lab.hpp"

using namespace pesin_lab;

namespace {

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

const double kLambda = (3.0 + std::sqrt(5.0)) / 2.0;

}  // namespace

TEST(NormalFrame, OrthonormalAndNormalToFlow) {
  const VectorField f = abc_field();
  const Vec x = v3(0.3, 1.7, 4.2);
  const NormalFrame fr = normal_frame(f, x);
  ASSERT_EQ(fr.rank(), 2);
  EXPECT_LT((fr.vectors.transpose() * fr.vectors - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((fr.vectors.transpose() * f.eval(x)).norm(), 1e-14);
  const NormalFrame again = normal_frame(f, x);
  EXPECT_EQ(fr.vectors, again.vectors);
}

TEST(NormalFrame, UndefinedAtZerosOfTheField) {
  try {
    normal_frame(zero_field(3), v3(0.1, 0.2, 0.3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularPoint);
  }
}

TEST(NormalFrame, ProjectionRemovesTheFlowComponent) {
  const VectorField f = abc_field();
  const Vec x = v3(2.0, 0.5, 1.0);
  const Vec v = v3(1.0, -2.0, 0.5);
  const Vec p = project_normal(f, x, v);
  EXPECT_NEAR(p.dot(f.eval(x)), 0.0, 1e-14);
  EXPECT_LT((project_normal(f, x, p) - p).norm(), 1e-14);
}

TEST(LinearPoincare, CatSuspensionTimeOneIsTheCatMatrix) {
  const PoincareCocycle p = linear_poincare(cat_suspension_field(), v3(0.2, 0.7, 0.0), 1.0);
  EXPECT_LT((p.matrix - cat_matrix()).norm(), 1e-12);
  const Eigen::EigenSolver<Mat> es(p.matrix);
  double hi = 0.0, lo = INFINITY;
  for (int i = 0; i < 2; ++i) {
    hi = std::max(hi, std::abs(es.eigenvalues()[i]));
    lo = std::min(lo, std::abs(es.eigenvalues()[i]));
  }
  EXPECT_NEAR(hi, kLambda, 1e-12);
  EXPECT_NEAR(lo, 1.0 / kLambda, 1e-12);
}

TEST(LinearPoincare, TimeZeroIsIdentity) {
  const PoincareCocycle p = linear_poincare(abc_field(), v3(1.0, 2.0, 3.0), 0.0);
  EXPECT_LT((p.matrix - Mat::Identity(2, 2)).norm(), 1e-14);
}

TEST(LinearPoincare, CocycleProperty) {
  const VectorField f = abc_field();
  const Vec x = v3(1.0, 2.0, 3.0);
  IntegratorOptions tight;
  tight.atol = tight.rtol = 1e-12;
  const PoincareCocycle a = linear_poincare(f, x, 0.8, tight);
  const PoincareCocycle b = linear_poincare(f, a.end.base, 1.3, tight);
  const PoincareCocycle ab = linear_poincare(f, x, 2.1, tight);
  EXPECT_LT((b.matrix * a.matrix - ab.matrix).norm(), 1e-8);
}

TEST(LinearPoincare, SolMetricExpandsContinuously) {
  // Half a unit of time expands the unstable direction by exactly lambda^{1/2}.
  const PoincareCocycle p = linear_poincare(cat_suspension_field(), v3(0.4, 0.1, 0.25), 0.5);
  const Eigen::JacobiSVD<Mat> svd(p.matrix);
  EXPECT_NEAR(svd.singularValues()[0], std::sqrt(kLambda), 1e-10);
  EXPECT_NEAR(svd.singularValues()[1], 1.0 / std::sqrt(kLambda), 1e-10);
}

TEST(Domination, CatSuspension) {
  const VectorField f = cat_suspension_field();
  const DominationReport one = domination_check(f, v3(0.3, 0.1, 0.0), 1.0, 10.0);
  EXPECT_TRUE(one.passed);
  EXPECT_EQ(one.orbit_samples, 10u);
  EXPECT_NEAR(one.max_product, 1.0 / (kLambda * kLambda), 1e-9);
  const DominationReport tenth = domination_check(f, v3(0.3, 0.1, 0.0), 0.1, 1.0);
  EXPECT_FALSE(tenth.passed);
  EXPECT_NEAR(tenth.max_product, std::pow(kLambda, -0.2), 1e-9);
  for (const auto& s : one.splitting) {
    EXPECT_NEAR(s.n_minus.norm(), 1.0, 1e-12);
    EXPECT_NEAR(s.n_plus.norm(), 1.0, 1e-12);
  }
}

TEST(Domination, ConstantFieldHasNoSplitting) {
  try {
    domination_check(builtin("constant3").field, v3(0.1, 0.2, 0.3), 1.0, 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSplitting);
  }
}

TEST(Domination, RejectsBadArguments) {
  EXPECT_THROW(domination_check(cat_suspension_field(), v3(0.1, 0.1, 0.0), 0.0, 1.0), Error);
  EXPECT_THROW(domination_check(cat_suspension_field(), v3(0.1, 0.1, 0.0), 2.0, 1.0), Error);
}
