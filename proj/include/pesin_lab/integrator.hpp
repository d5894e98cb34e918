#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>

#include "pesin_lab/vector_field.hpp"

namespace pesin_lab {

struct IntegratorOptions {
  double atol = 1e-9;
  double rtol = 1e-9;
  double h_init = 1e-2;
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 100'000'000;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t gluings = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DoPri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

/// Joint state: position, optional tangent matrix and accumulated divergence.
struct FlowState {
  Vec x;
  Mat m;
  double log_vol = 0.0;
};

class FlowIntegrator {
 public:
  FlowIntegrator(const VectorField& field, double direction, bool tangent, const IntegratorOptions& opts)
      : field_(field), s_(direction), tangent_(tangent), opts_(opts) {}

  FlowState run(FlowState y, double duration, IntegrationStats* stats) const {
    require(std::isfinite(duration) && duration >= 0.0, "integration time must be finite");
    IntegrationStats local;
    const Domain& dom = field_.domain();
    const auto& glue = field_.gluing();
    double tau = 0.0;
    double h = std::min(opts_.h_init > 0.0 ? opts_.h_init : 1e-2, opts_.h_max);
    const double h_min = 1e-14 * std::max(1.0, duration);
    int shortening = 0;

    while (duration - tau > 1e-14 * std::max(1.0, duration)) {
      if (local.accepted + local.rejected >= opts_.max_steps) fail(ErrorCode::StepUnderflow, "step budget exhausted");
      if (glue) apply_gluing(y, local);
      h = std::min({h, duration - tau, opts_.h_max});
      FlowState next;
      double err = 0.0;
      step(y, h, next, err);

      if (!std::isfinite(err) || !next.x.allFinite()) {
        if (h <= h_min) fail(ErrorCode::NonFiniteState, "state left finite range at t=" + fmt(tau));
        h *= 0.2;
        ++local.rejected;
        continue;
      }
      if (err > 1.0) {
        h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        ++local.rejected;
        if (h < h_min) fail(ErrorCode::StepUnderflow, "adaptive step fell below " + fmt(h_min));
        continue;
      }

      // Event location on the glued axis: shorten the step so it lands on the face.
      if (glue) {
        const int a = glue->axis;
        const double lo = dom.lower[a], hi = dom.upper[a];
        const double z0 = y.x[a], z1 = next.x[a];
        const double bound = z1 > hi ? hi : (z1 < lo ? lo : std::numeric_limits<double>::quiet_NaN());
        if (!std::isnan(bound) && std::abs(z1 - bound) > kGlueTol && shortening < 30) {
          const double frac = (bound - z0) / (z1 - z0);
          h *= std::clamp(frac, 1e-6, 1.0);
          ++shortening;
          continue;
        }
      }

      tau += h;
      y = std::move(next);
      ++local.accepted;
      shortening = 0;

      if (glue) apply_gluing(y, local);
      wrap_periodic(y.x);

      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= factor;
    }
    if (stats) *stats = local;
    return y;
  }

 private:
  static constexpr double kGlueTol = 1e-12;

  static std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  void rhs(const Vec& x, const Mat& m, Vec& dx, Mat& dm, double& dlv) const {
    dx = s_ * field_.eval(x);
    if (tangent_) {
      const Mat jac = field_.jacobian(x);
      dm = s_ * (jac * m);
      dlv = s_ * jac.trace();
    }
  }

  void step(const FlowState& y, double h, FlowState& out, double& err) const {
    using T = DoPri;
    const int n = field_.dim();
    Vec k1, k2, k3, k4, k5, k6, k7;
    Mat m1, m2, m3, m4, m5, m6, m7;
    double l1 = 0, l2 = 0, l3 = 0, l4 = 0, l5 = 0, l6 = 0, l7 = 0;
    const Mat& m = y.m;

    rhs(y.x, m, k1, m1, l1);
    if (!tangent_) m1.resize(0, 0);
    auto mstage = [&](auto&&... terms) -> Mat {
      if (!tangent_) return Mat();
      return (m + (terms + ...)).eval();
    };

    rhs(y.x + h * (T::a21 * k1), mstage(h * T::a21 * m1), k2, m2, l2);
    rhs(y.x + h * (T::a31 * k1 + T::a32 * k2), mstage(h * T::a31 * m1, h * T::a32 * m2), k3, m3, l3);
    rhs(y.x + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3),
        mstage(h * T::a41 * m1, h * T::a42 * m2, h * T::a43 * m3), k4, m4, l4);
    rhs(y.x + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4),
        mstage(h * T::a51 * m1, h * T::a52 * m2, h * T::a53 * m3, h * T::a54 * m4), k5, m5, l5);
    rhs(y.x + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5),
        mstage(h * T::a61 * m1, h * T::a62 * m2, h * T::a63 * m3, h * T::a64 * m4, h * T::a65 * m5), k6, m6, l6);

    out.x = y.x + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
    if (tangent_) {
      out.m = m + h * (T::b1 * m1 + T::b3 * m3 + T::b4 * m4 + T::b5 * m5 + T::b6 * m6);
      out.log_vol = y.log_vol + h * (T::b1 * l1 + T::b3 * l3 + T::b4 * l4 + T::b5 * l5 + T::b6 * l6);
    }
    rhs(out.x, out.m, k7, m7, l7);

    const Vec ex = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    double acc = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n; ++i) {
      const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y.x[i]), std::abs(out.x[i]));
      acc += (ex[i] / sc) * (ex[i] / sc);
      ++count;
    }
    if (tangent_) {
      const Mat em = h * (T::e1 * m1 + T::e3 * m3 + T::e4 * m4 + T::e5 * m5 + T::e6 * m6 + T::e7 * m7);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const double sc = opts_.atol + opts_.rtol * std::max(std::abs(m(i, j)), std::abs(out.m(i, j)));
          acc += (em(i, j) / sc) * (em(i, j) / sc);
          ++count;
        }
      }
    }
    err = std::sqrt(acc / static_cast<double>(count));
  }

  void apply_gluing(FlowState& y, IntegrationStats& stats) const {
    const auto& g = *field_.gluing();
    const Domain& dom = field_.domain();
    const int a = g.axis;
    const double lo = dom.lower[a], hi = dom.upper[a];
    if (std::abs(y.x[a] - hi) > kGlueTol && std::abs(y.x[a] - lo) > kGlueTol) return;
    const double rate = s_ * field_.eval(y.x)[a];
    if (std::abs(y.x[a] - hi) <= kGlueTol && rate >= 0.0) {
      y.x = g.forward(y.x);
      y.x[a] = lo;
      if (tangent_) y.m = g.forward_jacobian * y.m;
      ++stats.gluings;
    } else if (std::abs(y.x[a] - lo) <= kGlueTol && rate < 0.0) {
      y.x = g.backward(y.x);
      y.x[a] = hi;
      if (tangent_) y.m = g.backward_jacobian * y.m;
      ++stats.gluings;
    }
  }

  void wrap_periodic(Vec& x) const {
    const Domain& dom = field_.domain();
    for (int i = 0; i < dom.dim(); ++i) {
      if (dom.periodic[static_cast<std::size_t>(i)] && (x[i] < dom.lower[i] || x[i] >= dom.upper[i])) {
        x = dom.wrap(std::move(x));
        return;
      }
    }
  }

  const VectorField& field_;
  double s_;
  bool tangent_;
  IntegratorOptions opts_;
};

inline void check_point(const VectorField& field, const Vec& x) {
  if (x.size() != field.dim()) fail(ErrorCode::DimensionMismatch, "point has wrong dimension for " + field.name());
  if (!x.allFinite()) fail(ErrorCode::NonFiniteState, "initial point is not finite");
}

}  // namespace detail

/// X^t(x). Negative t integrates the reversed field.
inline TrajectoryPoint flow(const VectorField& field, const Vec& x, double t, const IntegratorOptions& opts = {},
                            IntegrationStats* stats = nullptr) {
  detail::check_point(field, x);
  detail::FlowState y{x, Mat(), 0.0};
  const detail::FlowIntegrator integ(field, t < 0.0 ? -1.0 : 1.0, false, opts);
  y = integ.run(std::move(y), std::abs(t), stats);
  return {field.canonical(std::move(y.x)), t};
}

/// Flow together with DX^t_x from the variational equation M' = DX(X^s x) M.
inline CocycleSegment tangent_flow(const VectorField& field, const Vec& x, double t, const IntegratorOptions& opts = {},
                                   IntegrationStats* stats = nullptr, double* log_volume = nullptr) {
  detail::check_point(field, x);
  detail::FlowState y{x, Mat::Identity(field.dim(), field.dim()), 0.0};
  const detail::FlowIntegrator integ(field, t < 0.0 ? -1.0 : 1.0, true, opts);
  y = integ.run(std::move(y), std::abs(t), stats);
  if (!y.m.allFinite()) fail(ErrorCode::NonFiniteState, "tangent matrix overflowed");
  if (log_volume) *log_volume = y.log_vol;
  const Vec start = field.canonical(x);
  Vec end = y.x;
  // A trajectory ending exactly on the glued face is re-expressed from the other side.
  if (field.gluing()) {
    const auto& g = *field.gluing();
    const Domain& dom = field.domain();
    if (end[g.axis] >= dom.upper[g.axis]) {
      y.m = g.forward_jacobian * y.m;
    }
  }
  end = field.canonical(std::move(end));
  return {{start, 0.0}, t, std::move(y.m), std::move(end)};
}

struct LiouvilleReport {
  double det = 0.0;          // product of segment determinants
  double det_product = 0.0;  // determinant of the full fundamental matrix
  double expected = 0.0;     // exp(int_0^t div X ds)
  double error = 0.0;        // |det - expected|
  std::size_t segments = 0;
};

/// Compares det DX^t_x with exp(int_0^t div X ds). The determinant is taken
/// as the product of the determinants over consecutive segments of length at
/// most `segment`, which stays accurate when the fundamental matrix itself is
/// badly conditioned.
inline LiouvilleReport liouville_report(const VectorField& field, const Vec& x, double t,
                                        const IntegratorOptions& opts = {}, double segment = 1.0) {
  require(segment > 0.0, "segment length must be positive");
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(t) / segment - 1e-12)));
  const double dt = t / static_cast<double>(n);
  LiouvilleReport r;
  r.segments = n;
  double log_det = 0.0, log_vol = 0.0;
  double sign = 1.0;
  Mat full = Mat::Identity(field.dim(), field.dim());
  Vec y = x;
  for (std::size_t k = 0; k < n; ++k) {
    double lv = 0.0;
    const CocycleSegment seg = tangent_flow(field, y, dt, opts, nullptr, &lv);
    const double d = seg.matrix.determinant();
    if (d < 0.0) sign = -sign;
    log_det += std::log(std::abs(d));
    log_vol += lv;
    full = seg.matrix * full;
    y = seg.end;
  }
  r.det = sign * std::exp(log_det);
  r.det_product = full.determinant();
  r.expected = std::exp(log_vol);
  r.error = std::abs(r.det - r.expected);
  return r;
}

/// |det DX^t_x - exp(int_0^t div X ds)|; reduces to |det - 1| for divergence-free fields.
inline double liouville_check(const VectorField& field, const Vec& x, double t, const IntegratorOptions& opts = {}) {
  return liouville_report(field, x, t, opts).error;
}

}  // namespace pesin_lab
