#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pesin_lab.hpp"

using namespace pesin_lab;

namespace {

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

// Exact solution of the harmonic oscillator in each (q, p) pair.
Vec harmonic_exact(const Vec& x, double t) {
  Vec y(4);
  for (int k = 0; k < 4; k += 2) {
    y[k] = x[k] * std::cos(t) + x[k + 1] * std::sin(t);
    y[k + 1] = -x[k] * std::sin(t) + x[k + 1] * std::cos(t);
  }
  return y;
}

VectorField contracting_field() {
  Polynomial fx(3), fy(3), fz(3);
  fx.add({1, 0, 0, 0}, -1.0);
  return polynomial_field("contract", {fx, fy, fz}, Domain::box(Vec::Constant(3, -5.0), Vec::Constant(3, 5.0)));
}

}  // namespace

TEST(Domain, WrapAndContains) {
  const Domain d = Domain::torus(3, 2.0);
  const Vec w = d.wrap(v3(-0.5, 2.5, 4.0));
  EXPECT_DOUBLE_EQ(w[0], 1.5);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  EXPECT_DOUBLE_EQ(w[2], 0.0);
  EXPECT_TRUE(d.contains(w));
  EXPECT_FALSE(d.contains(v3(0.0, 0.0, 2.0)));
  EXPECT_DOUBLE_EQ(d.volume(), 8.0);
}

TEST(Random, SubstreamsAreReproducibleAndDistinct) {
  Rng a = substream(7, 3, 1), b = substream(7, 3, 1), c = substream(7, 4, 1), d = substream(8, 3, 1);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  Rng r = substream(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(r);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
  auto f = [](std::size_t i) {
    Rng r = substream(42, i);
    return uniform01(r);
  };
  const auto one = parallel_map(257, 1, f);
  const auto four = parallel_map(257, 4, f);
  EXPECT_EQ(one, four);
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  auto f = [](std::size_t i) -> int {
    if (i == 5 || i == 9) throw std::runtime_error("index " + std::to_string(i));
    return static_cast<int>(i);
  };
  try {
    parallel_map(20, 3, f);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "index 5");
  }
}

TEST(Integrator, HarmonicOscillatorMatchesClosedForm) {
  const System s = builtin("harmonic4");
  const Vec x = (Vec(4) << 0.5, -0.3, 0.8, 0.1).finished();
  for (double t : {0.7, 10.0, 100.0}) {
    const Vec y = flow(s.field, x, t).position;
    EXPECT_LT((y - harmonic_exact(x, t)).norm(), 1e-6 * std::max(1.0, t)) << "t=" << t;
  }
  // Sign convention: for H = (q^2 + p^2)/2 the pair rotates clockwise.
  const Vec y = flow(s.field, (Vec(4) << 1.0, 0.0, 0.0, 0.0).finished(), std::numbers::pi / 2).position;
  EXPECT_NEAR(y[0], 0.0, 1e-8);
  EXPECT_NEAR(y[1], -1.0, 1e-8);
}

TEST(Integrator, HalvingToleranceHalvesTheDiscrepancy) {
  // Richardson-style check: the discrepancy between runs at tol and tol/2 is
  // of the order of tol, and the error against the exact flow shrinks.
  const System s = builtin("harmonic4");
  const Vec x = (Vec(4) << 1.0, 0.2, -0.4, 0.6).finished();
  const double t = 20.0;
  const Vec exact = harmonic_exact(x, t);
  double prev = INFINITY;
  for (double tol : {1e-6, 5e-7, 2.5e-7}) {
    IntegratorOptions o;
    o.atol = o.rtol = tol;
    const double err = (flow(s.field, x, t, o).position - exact).norm();
    EXPECT_LT(err, 100.0 * tol * t);
    EXPECT_LT(err, prev * 1.05);
    prev = err;
  }
}

TEST(Integrator, TangentFlowMatchesFiniteDifferences) {
  const VectorField f = builtin("abc").field;
  const Vec x = v3(1.0, 2.0, 3.0);
  const double t = 3.0, h = 1e-6;
  IntegratorOptions tight;
  tight.atol = tight.rtol = 1e-12;
  const CocycleSegment seg = tangent_flow(f, x, t, tight);
  for (int k = 0; k < 3; ++k) {
    const Vec e = Vec::Unit(3, k);
    const Vec fd = (flow(f, x + h * e, t, tight).position - flow(f, x - h * e, t, tight).position) / (2 * h);
    EXPECT_LT((seg.matrix.col(k) - fd).norm(), 1e-5) << "column " << k;
  }
}

TEST(Integrator, LiouvilleForDivergenceFreeFields) {
  for (const char* name : {"abc", "cat_suspension3", "harmonic4", "coupled_quartic4"}) {
    const System s = builtin(name);
    Rng rng = substream(3, 0);
    const Vec x = pesin_lab::detail::sample_volume(s.field, rng);
    for (double t : {1.0, 10.0}) EXPECT_LT(liouville_check(s.field, x, t), 1e-5) << name << " t=" << t;
  }
}

TEST(Integrator, LiouvilleWithNonzeroDivergence) {
  const VectorField f = contracting_field();
  EXPECT_FALSE(f.divergence_free());
  const LiouvilleReport r = liouville_report(f, v3(1.0, 0.5, 0.0), 3.0);
  EXPECT_NEAR(r.expected, std::exp(-3.0), 1e-9);
  EXPECT_LT(r.error, 1e-8);
}

TEST(Integrator, CatSuspensionTimeOneMap) {
  const VectorField f = cat_suspension_field();
  const Vec y = flow(f, v3(0.25, 0.125, 0.0), 1.0).position;
  EXPECT_NEAR(y[0], 0.625, 1e-12);
  EXPECT_NEAR(y[1], 0.375, 1e-12);
  EXPECT_NEAR(y[2], 0.0, 1e-12);
  const Vec back = flow(f, y, -1.0).position;
  EXPECT_LT((back - v3(0.25, 0.125, 0.0)).norm(), 1e-12);
  IntegrationStats stats;
  flow(f, v3(0.3, 0.6, 0.5), 3.2, {}, &stats);
  EXPECT_EQ(stats.gluings, 3u);
}

TEST(Integrator, TangentFlowOfCatSuspension) {
  const CocycleSegment seg = tangent_flow(cat_suspension_field(), v3(0.1, 0.2, 0.0), 2.0);
  Mat c2 = Mat::Identity(3, 3);
  c2.topLeftCorner(2, 2) = cat_matrix() * cat_matrix();
  EXPECT_LT((seg.matrix - c2).norm(), 1e-12);
}

TEST(Integrator, BlowUpIsReported) {
  Polynomial fx(3), fy(3), fz(3);
  fx.add({2, 0, 0, 0}, 1.0);
  const VectorField f =
      polynomial_field("blowup", {fx, fy, fz}, Domain::box(Vec::Constant(3, -1.0), Vec::Constant(3, 1.0)));
  try {
    flow(f, v3(1.0, 0.0, 0.0), 2.0);
    FAIL() << "expected a numerical error";
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::NonFiniteState || e.code() == ErrorCode::StepUnderflow) << e.what();
    EXPECT_FALSE(is_validation_error(e.code()));
  }
}

TEST(Systems, BuiltinsAndErrors) {
  for (const auto& n : builtin_names()) {
    const System s = builtin(n);
    EXPECT_EQ(s.field.name(), n);
    EXPECT_TRUE(s.field.divergence_free()) << n;
    EXPECT_EQ(static_cast<int>(s.entropy_resolution.size()), s.field.dim());
  }
  try {
    builtin("lorenz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSystem);
  }
}

TEST(Systems, AbcDivergenceVanishes) {
  const VectorField f = abc_field(1.0, 0.7, 0.3);
  Rng rng = substream(1, 1);
  for (int i = 0; i < 50; ++i) {
    const Vec x = pesin_lab::detail::sample_volume(f, rng);
    EXPECT_NEAR(f.divergence(x), 0.0, 1e-14);
  }
}

TEST(Systems, PolynomialFieldsFromJson) {
  const auto rot = nlohmann::json::parse(R"({"name": "shear", "kind": "polynomial", "dim": 3,
      "divergence_free": true,
      "coefficients": [[[[0, 1, 0], 1.0]], [[[0, 0, 1], 1.0]], [[[1, 0, 0], 1.0]]]})");
  const System s = system_from_json(rot);
  EXPECT_TRUE(s.field.divergence_free());
  EXPECT_DOUBLE_EQ(s.field.eval(v3(1.0, 2.0, 3.0))[0], 2.0);

  nlohmann::json bad = rot;
  bad["coefficients"] = nlohmann::json::parse("[[[[1, 0, 0], 1.0]], [], []]");
  try {
    system_from_json(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }

  const auto ham3 = nlohmann::json::parse(R"({"kind": "hamiltonian", "dim": 3, "coefficients": [[[2, 0, 0], 0.5]]})");
  try {
    system_from_json(ham3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }

  const auto ham = nlohmann::json::parse(R"({"name": "h4", "kind": "hamiltonian", "dim": 4,
      "coefficients": [[[2, 0, 0, 0], 0.5], [[0, 2, 0, 0], 0.5], [[0, 0, 2, 0], 0.5], [[0, 0, 0, 2], 0.5]]})");
  const System h = system_from_json(ham);
  ASSERT_TRUE(h.hamiltonian.has_value());
  const Vec x = (Vec(4) << 0.5, -0.3, 0.8, 0.1).finished();
  EXPECT_LT((flow(h.field, x, 5.0).position - harmonic_exact(x, 5.0)).norm(), 1e-6);
}
