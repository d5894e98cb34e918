#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pesin_lab/parallel.hpp"
#include "pesin_lab/poincare.hpp"
#include "pesin_lab/random.hpp"

namespace pesin_lab {

struct LyapunovSpectrum {
  std::vector<double> exponents;  // descending
  double t_total = 0.0;
  double renorm_interval = 0.0;
  double residual_sum = 0.0;
  /// Index (into `exponents`) of the exponent whose frame vector is most
  /// aligned with X at the final point; nullopt when the end point is singular.
  std::optional<int> flow_exponent_index;
  double flow_alignment_deg = 0.0;
  Vec end;
  Mat frame;  // evolved orthonormal frame, columns ordered like `exponents`
  double min_speed = 0.0;  // smallest |X| seen at renormalization points
};

struct SamplingOptions {
  std::size_t threads = 1;
  double renorm_interval = 0.5;
};

namespace detail {

/// One QR step of the Benettin scheme: Q <- qr(M Q), returns log|diag R|.
inline Vec qr_renormalize(const Mat& m, Mat& q) {
  const Mat z = m * q;
  const Eigen::HouseholderQR<Mat> qr(z);
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  q = qr.householderQ() * Mat::Identity(z.rows(), z.cols());
  Vec logs(z.cols());
  for (int i = 0; i < z.cols(); ++i) {
    if (r(i, i) < 0.0) {
      q.col(i) = -q.col(i);
      r(i, i) = -r(i, i);
    }
    if (!(r(i, i) > 0.0) || !std::isfinite(r(i, i))) fail(ErrorCode::NonFiniteState, "degenerate tangent frame");
    logs[i] = std::log(r(i, i));
  }
  return logs;
}

}  // namespace detail

/// Lyapunov spectrum along the orbit of x by QR re-orthonormalization of the
/// tangent cocycle every `renorm_interval` time units.
inline LyapunovSpectrum spectrum(const VectorField& field, const Vec& x, double t_total, double renorm_interval = 0.5,
                                 const IntegratorOptions& opts = {}) {
  require(t_total > 0.0 && std::isfinite(t_total), "t_total must be positive");
  require(renorm_interval > 0.0, "renorm_interval must be positive");
  const int dim = field.dim();
  Mat q = Mat::Identity(dim, dim);
  Vec sums = Vec::Zero(dim);
  Vec y = field.canonical(x);
  double min_speed = field.eval(y).norm();

  const auto full = static_cast<std::size_t>(std::floor(t_total / renorm_interval));
  const double rest = t_total - static_cast<double>(full) * renorm_interval;
  auto advance = [&](double dt) {
    const CocycleSegment seg = tangent_flow(field, y, dt, opts);
    sums += detail::qr_renormalize(seg.matrix, q);
    y = seg.end;
    min_speed = std::min(min_speed, field.eval(y).norm());
  };
  for (std::size_t k = 0; k < full; ++k) advance(renorm_interval);
  if (rest > 1e-12 * t_total) advance(rest);

  std::vector<int> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sums[a] > sums[b]; });

  LyapunovSpectrum s;
  s.t_total = t_total;
  s.renorm_interval = renorm_interval;
  s.end = y;
  s.min_speed = min_speed;
  s.frame = Mat(dim, dim);
  double total = 0.0;
  for (int i = 0; i < dim; ++i) {
    const int k = order[static_cast<std::size_t>(i)];
    s.exponents.push_back(sums[k] / t_total);
    s.frame.col(i) = q.col(k);
    total += sums[k] / t_total;
  }
  s.residual_sum = std::abs(total);

  const Vec xv = field.eval(y);
  if (xv.norm() >= kSingularTol) {
    const Vec u = xv.normalized();
    int best = 0;
    double best_cos = -1.0;
    for (int i = 0; i < dim; ++i) {
      const double c = std::abs(s.frame.col(i).dot(u));
      if (c > best_cos) {
        best_cos = c;
        best = i;
      }
    }
    s.flow_exponent_index = best;
    s.flow_alignment_deg = std::acos(std::min(1.0, best_cos)) * 180.0 / std::numbers::pi;
  }
  return s;
}

/// max(|l1 + l3|, |l2|) for a 3D spectrum; both vanish for volume-preserving flows.
inline double pairing_check(const LyapunovSpectrum& s) {
  require(s.exponents.size() == 3, "pairing_check needs a three-dimensional spectrum");
  return std::max(std::abs(s.exponents[0] + s.exponents[2]), std::abs(s.exponents[1]));
}

struct ExponentSample {
  Vec x;
  std::vector<double> values;  // full spectrum, or the single finite-n value
  double lambda_plus = 0.0;
  double weight = 1.0;
  std::size_t rejected = 0;
};

/// Monte-Carlo estimate of an integrated exponent, with its per-sample data.
struct IntegratedExponent {
  enum class Method { QrAverage, FiniteNInf, LevelTransversal };

  double value = 0.0;
  std::size_t n_samples = 0;
  double t_horizon = 0.0;
  double std_error = 0.0;
  Method method = Method::QrAverage;
  std::size_t n_rejected = 0;
  std::uint64_t seed = 0;
  std::vector<ExponentSample> samples;
};

inline std::string to_string(IntegratedExponent::Method m) {
  switch (m) {
    case IntegratedExponent::Method::QrAverage: return "qr_average";
    case IntegratedExponent::Method::FiniteNInf: return "finite_n_inf";
    case IntegratedExponent::Method::LevelTransversal: return "level_transversal";
  }
  return "unknown";
}

namespace detail {

inline constexpr std::uint64_t kVolumeStream = 0x766f6c756d65ULL;
inline constexpr std::size_t kMaxRedraws = 16;
inline constexpr double kNearSingular = 1e-9;

/// Uniform point of the domain restricted to the field's invariant support.
inline Vec sample_volume(const VectorField& field, Rng& rng) {
  const Domain& d = field.domain();
  for (std::size_t attempt = 0; attempt < 10'000'000; ++attempt) {
    Vec x(d.dim());
    for (int i = 0; i < d.dim(); ++i) x[i] = uniform(rng, d.lower[i], d.upper[i]);
    if (field.in_support(x)) return x;
  }
  fail(ErrorCode::AllSamplesRejected, "support region of " + field.name() + " is too small to sample");
}

inline void summarize(IntegratedExponent& out, std::vector<std::optional<ExponentSample>>&& draws) {
  std::vector<double> values;
  for (auto& d : draws) {
    if (!d) {
      out.n_rejected += kMaxRedraws;
      continue;
    }
    out.n_rejected += d->rejected;
    values.push_back(d->lambda_plus);
    out.samples.push_back(std::move(*d));
  }
  if (values.empty()) fail(ErrorCode::AllSamplesRejected, "every sampled orbit was rejected");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  out.value = mean;
  out.n_samples = values.size();
  out.std_error = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
}

}  // namespace detail

/// Lambda(X) = integral of lambda+ over the normalized volume, by Monte Carlo.
/// Orbits that start regular but pass within 1e-9 of a zero of X are redrawn.
inline IntegratedExponent integrated_exponent(const VectorField& field, std::size_t n_samples, double t_horizon,
                                              std::uint64_t seed, const IntegratorOptions& opts = {},
                                              const SamplingOptions& sampling = {}) {
  require(n_samples >= 1, "n_samples must be at least 1");
  auto one = [&](std::size_t i) -> std::optional<ExponentSample> {
    Rng rng = substream(seed, i, detail::kVolumeStream);
    ExponentSample s;
    for (std::size_t attempt = 0; attempt < detail::kMaxRedraws; ++attempt) {
      s.x = detail::sample_volume(field, rng);
      const bool stationary = field.is_singular(s.x);
      try {
        const LyapunovSpectrum sp = spectrum(field, s.x, t_horizon, sampling.renorm_interval, opts);
        if (!stationary && sp.min_speed < detail::kNearSingular) {
          ++s.rejected;
          continue;
        }
        s.values = sp.exponents;
        s.lambda_plus = std::max(sp.exponents.front(), 0.0);
        return s;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteState && e.code() != ErrorCode::StepUnderflow) throw;
        ++s.rejected;
      }
    }
    return std::nullopt;
  };
  IntegratedExponent out;
  out.t_horizon = t_horizon;
  out.seed = seed;
  out.method = IntegratedExponent::Method::QrAverage;
  detail::summarize(out, parallel_map(n_samples, sampling.threads, one));
  return out;
}

/// (1/n) integral of log ||P^n_X(x)|| dmu, the n-th term of the infimum
/// formula for Lambda. Stationary sample points (X(x) = 0) use N_x = T_x M,
/// i.e. the full tangent map.
inline IntegratedExponent finite_n_estimator(const VectorField& field, int n, std::size_t n_samples, std::uint64_t seed,
                                             const IntegratorOptions& opts = {}, const SamplingOptions& sampling = {}) {
  require(n >= 1, "n must be at least 1");
  require(n_samples >= 1, "n_samples must be at least 1");
  const double t = static_cast<double>(n);
  auto one = [&](std::size_t i) -> std::optional<ExponentSample> {
    Rng rng = substream(seed, i, detail::kVolumeStream);
    ExponentSample s;
    for (std::size_t attempt = 0; attempt < detail::kMaxRedraws; ++attempt) {
      s.x = detail::sample_volume(field, rng);
      try {
        double norm = 0.0;
        if (field.is_singular(s.x)) {
          norm = Eigen::JacobiSVD<Mat>(tangent_flow(field, s.x, t, opts).matrix).singularValues()[0];
        } else {
          const PoincareCocycle p = linear_poincare(field, s.x, t, opts);
          norm = Eigen::JacobiSVD<Mat>(p.matrix).singularValues()[0];
        }
        s.lambda_plus = std::log(norm) / t;
        s.values = {s.lambda_plus};
        return s;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularPoint && e.code() != ErrorCode::NonFiniteState &&
            e.code() != ErrorCode::StepUnderflow)
          throw;
        ++s.rejected;
      }
    }
    return std::nullopt;
  };
  IntegratedExponent out;
  out.t_horizon = t;
  out.seed = seed;
  out.method = IntegratedExponent::Method::FiniteNInf;
  detail::summarize(out, parallel_map(n_samples, sampling.threads, one));
  return out;
}

}  // namespace pesin_lab
