#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pesin_lab/integrator.hpp"

namespace pesin_lab {

/// Orthonormal frame of the normal space at `base`.
///
/// Frame vectors, like the flow direction, are expressed in chart-metric
/// coordinates w = L(base) v; for fields without a chart metric these are the
/// ambient coordinates.
struct NormalFrame {
  Vec base;
  Mat metric;     // L(base)
  Vec direction;  // unit flow direction, metric coordinates
  Mat vectors;    // dim x k, orthonormal, orthogonal to direction (and any extra constraint)

  int rank() const { return static_cast<int>(vectors.cols()); }

  /// Frame vector i in ambient tangent coordinates, Euclidean-normalized.
  Vec ambient(int i) const {
    Vec v = metric.inverse() * vectors.col(i);
    return v / v.norm();
  }
};

/// P^t in a pair of normal frames.
struct PoincareCocycle {
  NormalFrame start;
  NormalFrame end;
  double t = 0.0;
  Mat matrix;
};

namespace detail {

/// Completes orthonormal `constraints` with canonical basis vectors. The kept
/// basis vectors are chosen greedily by largest residual after projection
/// (ties keep the lower index), which drops the vectors most parallel to the
/// constraints; they are then Gram-Schmidt orthonormalized in index order.
inline Mat complete_frame(const std::vector<Vec>& constraints, int dim) {
  const int need = dim - static_cast<int>(constraints.size());
  std::vector<Vec> span = constraints;
  std::vector<int> kept;
  auto residual = [&](const Vec& v) {
    Vec r = v;
    for (const auto& q : span) r -= q.dot(r) * q;
    return r;
  };
  for (int k = 0; k < need; ++k) {
    int best = -1;
    double best_norm = -1.0;
    for (int i = 0; i < dim; ++i) {
      if (std::find(kept.begin(), kept.end(), i) != kept.end()) continue;
      const double n = residual(Vec::Unit(dim, i)).norm();
      if (n > best_norm + 1e-15) {
        best_norm = n;
        best = i;
      }
    }
    kept.push_back(best);
    const Vec r = residual(Vec::Unit(dim, best));
    span.push_back(r / r.norm());
  }
  std::sort(kept.begin(), kept.end());

  Mat frame(dim, need);
  std::vector<Vec> basis = constraints;
  for (int k = 0; k < need; ++k) {
    Vec v = Vec::Unit(dim, kept[static_cast<std::size_t>(k)]);
    // Two passes of modified Gram-Schmidt keep orthogonality at ~1e-16.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) v -= q.dot(v) * q;
    }
    v /= v.norm();
    frame.col(k) = v;
    basis.push_back(v);
  }
  return frame;
}

inline std::vector<Vec> orthonormalize(std::vector<Vec> vs) {
  std::vector<Vec> out;
  for (auto& v : vs) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : out) v -= q.dot(v) * q;
    }
    const double n = v.norm();
    if (n < 1e-12) fail(ErrorCode::SingularPoint, "frame constraints are linearly dependent");
    out.push_back(v / n);
  }
  return out;
}

}  // namespace detail

/// Deterministic normal frame at x. `extra` (ambient covectors, e.g. grad H)
/// adds constraints: frame vectors v also satisfy <extra_i, v> = 0.
inline NormalFrame normal_frame(const VectorField& field, const Vec& x, const std::vector<Vec>& extra = {}) {
  const Vec xv = field.eval(x);
  if (xv.norm() < kSingularTol) fail(ErrorCode::SingularPoint, "normal bundle undefined at a zero of the field");
  const Mat l = field.metric(x);
  const Vec u = (l * xv).normalized();
  std::vector<Vec> constraints{u};
  if (!extra.empty()) {
    const Mat lit = l.inverse().transpose();
    for (const auto& g : extra) constraints.push_back(lit * g);
  }
  constraints = detail::orthonormalize(std::move(constraints));
  return {x, l, u, detail::complete_frame(constraints, field.dim())};
}

/// Orthogonal projection of v onto N_x = X(x)^perp (in the chart metric).
inline Vec project_normal(const VectorField& field, const Vec& x, const Vec& v) {
  const Vec xv = field.eval(x);
  if (xv.norm() < kSingularTol) fail(ErrorCode::SingularPoint, "projection undefined at a zero of the field");
  const Mat l = field.metric(x);
  const Vec lx = l * xv;
  return v - ((l * v).dot(lx) / lx.squaredNorm()) * xv;
}

/// Matrix of Pi o DX^t between two given frames (based at x and X^t(x)).
inline Mat poincare_matrix(const CocycleSegment& seg, const NormalFrame& start, const NormalFrame& end) {
  const Mat tangent = end.metric * seg.matrix * start.metric.inverse();
  Mat projected = tangent * start.vectors;
  for (int c = 0; c < projected.cols(); ++c) {
    projected.col(c) -= end.direction.dot(projected.col(c)) * end.direction;
  }
  return end.vectors.transpose() * projected;
}

/// P^t_X(x) in the deterministic frames at x and X^t(x).
inline PoincareCocycle linear_poincare(const VectorField& field, const Vec& x, double t,
                                       const IntegratorOptions& opts = {}) {
  const Vec x0 = field.canonical(x);
  NormalFrame start = normal_frame(field, x0);
  const CocycleSegment seg = tangent_flow(field, x0, t, opts);
  NormalFrame end = normal_frame(field, seg.end);
  Mat m = poincare_matrix(seg, start, end);
  return {std::move(start), std::move(end), t, std::move(m)};
}

struct DominationSample {
  Vec base;
  Vec n_minus;  // ambient, unit
  Vec n_plus;   // ambient, unit, at X^ell(base)
  double product = 0.0;
};

/// Finite-orbit test of an ell-dominated splitting N- + N+ for P^t.
///
/// N-/N+ are the finite-time singular directions of P^ell (a proxy for the
/// invariant Oseledets sub-bundles): N- is spanned by the weak right singular
/// vectors at y, N+ by the strong left singular vectors at X^ell(y). The
/// split is placed at the largest gap between consecutive singular values.
struct DominationReport {
  double ell = 0.0;
  double horizon = 0.0;
  std::size_t orbit_samples = 0;
  double max_product = 0.0;
  std::vector<DominationSample> splitting;
  bool passed = false;
  std::string splitting_method = "finite-time singular directions of P^ell";
};

inline DominationReport domination_check(const VectorField& field, const Vec& x, double ell, double horizon,
                                         const IntegratorOptions& opts = {}) {
  require(ell > 0.0 && std::isfinite(ell), "ell must be positive");
  require(horizon >= ell, "horizon must be at least ell");
  const auto samples = static_cast<std::size_t>(std::floor(horizon / ell + 1e-9));
  DominationReport rep;
  rep.ell = ell;
  rep.horizon = horizon;
  rep.orbit_samples = samples;
  Vec y = field.canonical(x);
  for (std::size_t k = 0; k < samples; ++k) {
    const PoincareCocycle fwd = linear_poincare(field, y, ell, opts);
    const Eigen::JacobiSVD<Mat> svd(fwd.matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    const int r = static_cast<int>(sv.size());
    if (sv[0] - sv[r - 1] < 1e-10) {
      fail(ErrorCode::DegenerateSplitting, "P^ell has equal singular values; no splitting is defined");
    }
    int split = 1;  // N+ = first `split` singular directions
    double gap = -1.0;
    for (int i = 0; i + 1 < r; ++i) {
      const double g = std::log(sv[i]) - std::log(sv[i + 1]);
      if (g > gap) {
        gap = g;
        split = i + 1;
      }
    }
    const double weak = sv[split];

    const Vec y_next = fwd.end.base;
    const PoincareCocycle bwd = linear_poincare(field, y_next, -ell, opts);
    const Mat strong_dirs = svd.matrixU().leftCols(split);
    const Eigen::JacobiSVD<Mat> back(bwd.matrix * strong_dirs);
    const double back_norm = back.singularValues()[0];

    DominationSample s;
    s.base = y;
    s.product = weak * back_norm;
    s.n_minus = (fwd.start.metric.inverse() * (fwd.start.vectors * svd.matrixV().col(split))).normalized();
    s.n_plus = (fwd.end.metric.inverse() * (fwd.end.vectors * svd.matrixU().col(0))).normalized();
    rep.max_product = std::max(rep.max_product, s.product);
    rep.splitting.push_back(std::move(s));
    y = y_next;
  }
  rep.passed = rep.max_product <= 0.5;
  return rep;
}

}  // namespace pesin_lab
