#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pesin_lab/hamiltonian_system.hpp"
#include "pesin_lab/lyapunov.hpp"
#include "pesin_lab/parallel.hpp"
#include "pesin_lab/poincare.hpp"
#include "pesin_lab/random.hpp"

namespace pesin_lab {

inline HamiltonianSystem hamiltonian_field(HamiltonianSpec spec) { return HamiltonianSystem(std::move(spec)); }

/// Integrator tolerances used for level computations; tight enough that
/// energy drift stays well below 1e-6 up to e = 50 over t = 10^3.
inline IntegratorOptions hamiltonian_integrator_options() {
  IntegratorOptions o;
  o.atol = 1e-11;
  o.rtol = 1e-11;
  return o;
}

/// max over `count` random box points and the canonical basis of |omega(X_H(x), v) - DH(x) v|.
inline double omega_identity_residual(const HamiltonianSystem& sys, std::size_t count, std::uint64_t seed) {
  const double w = sys.spec().box_half_width;
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = substream(seed, i, 0x6f6d656761ULL);
    Vec x(4);
    for (int k = 0; k < 4; ++k) x[k] = uniform(rng, -w, w);
    const Vec xh = sys.field().eval(x);
    const Vec g = sys.gradient(x);
    for (int k = 0; k < 4; ++k) {
      const Vec v = Vec::Unit(4, k);
      worst = std::max(worst, std::abs(symplectic_form(xh, v) - g.dot(v)) / std::max(1.0, g.norm()));
    }
  }
  return worst;
}

/// Points of H^{-1}(e) drawn from the normalized Liouville measure on the level.
struct EnergyLevelSample {
  double energy = 0.0;
  double level_tol = 1e-9;
  std::vector<Vec> points;
  std::vector<double> weights;  // relative density of each point, sums to points.size()
  bool regular = true;          // no gradient norm below 1e-8 among the points
  std::size_t n_failed = 0;     // seeds whose ray missed the level inside the box
};

namespace detail {

inline constexpr std::uint64_t kLevelStream = 0x6c6576656cULL;
inline constexpr double kCriticalGradient = 1e-8;
inline constexpr double kDriftLimit = 1e-6;
inline constexpr int kRayScan = 512;

/// Uniform direction on the unit 3-sphere (Box-Muller on our own uniforms).
inline Vec sphere_direction(Rng& rng) {
  Vec d(4);
  for (int k = 0; k < 4; k += 2) {
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform01(rng)));
    const double a = 2.0 * std::numbers::pi * uniform01(rng);
    d[k] = r * std::cos(a);
    d[k + 1] = r * std::sin(a);
  }
  return d / d.norm();
}

struct LevelPoint {
  Vec x;
  double weight = 0.0;
};

/// First crossing of H = e along the ray t d (t > 0) inside the box, by scan,
/// bisection and a Newton polish along grad H.
inline std::optional<LevelPoint> ray_to_level(const HamiltonianSystem& sys, const Vec& d, double e, double tol) {
  const double w = sys.spec().box_half_width;
  const double t_exit = w / d.cwiseAbs().maxCoeff();
  auto g = [&](double t) { return sys.energy(t * d) - e; };
  double lo = 0.0, glo = g(0.0);
  if (!(glo < 0.0)) return std::nullopt;
  double hi = -1.0;
  for (int k = 1; k <= kRayScan; ++k) {
    const double t = t_exit * k / kRayScan;
    if (g(t) >= 0.0) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi < 0.0) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  Vec x = 0.5 * (lo + hi) * d;
  for (int it = 0; it < 100 && std::abs(sys.energy(x) - e) > 0.1 * tol; ++it) {
    const Vec grad = sys.gradient(x);
    const double gn = grad.squaredNorm();
    if (gn == 0.0) break;
    x -= ((sys.energy(x) - e) / gn) * grad;
  }
  if (!(std::abs(sys.energy(x) - e) <= tol)) return std::nullopt;
  const double r = x.norm();
  const double radial = d.dot(sys.gradient(x));
  if (!(radial > 0.0)) return std::nullopt;
  return LevelPoint{x, r * r * r / radial};
}

}  // namespace detail

/// `count` points of the level e. Directions are uniform on S^3; the point is
/// the first crossing of the level along the ray, with Liouville weight
/// r^3 / (d . grad H). Each point gets up to 16 independent directions.
inline EnergyLevelSample sample_level(const HamiltonianSystem& sys, double e, std::size_t count, std::uint64_t seed,
                                      double level_tol = 1e-9, std::size_t threads = 1) {
  require(count >= 1, "count must be at least 1");
  require(level_tol > 0.0, "level_tol must be positive");
  const auto draws = parallel_map(count, threads, [&](std::size_t i) -> std::optional<detail::LevelPoint> {
    Rng rng = substream(seed, i, detail::kLevelStream);
    for (std::size_t attempt = 0; attempt < detail::kMaxRedraws; ++attempt) {
      if (auto p = detail::ray_to_level(sys, detail::sphere_direction(rng), e, level_tol)) return p;
    }
    return std::nullopt;
  });
  EnergyLevelSample s;
  s.energy = e;
  s.level_tol = level_tol;
  double total = 0.0;
  for (const auto& d : draws) {
    if (!d) {
      ++s.n_failed;
      continue;
    }
    s.points.push_back(d->x);
    s.weights.push_back(d->weight);
    total += d->weight;
    if (sys.gradient(d->x).norm() < detail::kCriticalGradient) s.regular = false;
  }
  if (s.points.empty()) {
    std::ostringstream msg;
    msg << "no point of the level H = " << e << " found inside the working box";
    fail(ErrorCode::EmptyLevel, msg.str());
  }
  for (double& w : s.weights) w *= static_cast<double>(s.points.size()) / total;
  return s;
}

/// Orthonormal frame of the plane orthogonal to X_H(x) and grad H(x), oriented
/// so that omega(f1, f2) = +1.
inline NormalFrame transversal_frame(const HamiltonianSystem& sys, const Vec& x) {
  const Vec g = sys.gradient(x);
  if (g.norm() < detail::kCriticalGradient) fail(ErrorCode::CriticalLevel, "grad H vanishes at the base point");
  NormalFrame f = normal_frame(sys.field(), x, {g});
  if (symplectic_form(f.vectors.col(0), f.vectors.col(1)) < 0.0) f.vectors.col(1) = -f.vectors.col(1);
  return f;
}

/// 2x2 transversal linear Poincare cocycle in the oriented frames at x and phi^t(x).
inline PoincareCocycle transversal_poincare(const HamiltonianSystem& sys, const Vec& x, double t,
                                            const IntegratorOptions& opts = {}) {
  NormalFrame start = transversal_frame(sys, x);
  const CocycleSegment seg = tangent_flow(sys.field(), x, t, opts);
  NormalFrame end = transversal_frame(sys, seg.end);
  Mat m = end.vectors.transpose() * seg.matrix * start.vectors;
  return {std::move(start), std::move(end), t, std::move(m)};
}

/// det of the transversal cocycle over [0, t], taken as the product of the
/// determinants over segments of length at most `segment`; expected = 1.
inline LiouvilleReport transversal_determinant(const HamiltonianSystem& sys, const Vec& x, double t,
                                               const IntegratorOptions& opts = hamiltonian_integrator_options(),
                                               double segment = 1.0) {
  require(segment > 0.0, "segment length must be positive");
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(t) / segment - 1e-12)));
  const double dt = t / static_cast<double>(n);
  LiouvilleReport r;
  r.segments = n;
  r.expected = 1.0;
  double log_det = 0.0, sign = 1.0;
  Mat full = Mat::Identity(2, 2);
  Vec y = x;
  for (std::size_t k = 0; k < n; ++k) {
    const PoincareCocycle p = transversal_poincare(sys, y, dt, opts);
    const double d = p.matrix.determinant();
    if (d < 0.0) sign = -sign;
    log_det += std::log(std::abs(d));
    full = p.matrix * full;
    y = p.end.base;
  }
  r.det = sign * std::exp(log_det);
  r.det_product = full.determinant();
  r.error = std::abs(r.det - 1.0);
  return r;
}

struct TransversalSpectrum {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double energy_drift = 0.0;
  Vec end;
};

/// Both exponents of the transversal cocycle by QR renormalization.
inline TransversalSpectrum transversal_spectrum(const HamiltonianSystem& sys, const Vec& x, double t_total,
                                                double renorm_interval = 0.5, const IntegratorOptions& opts = hamiltonian_integrator_options()) {
  require(t_total > 0.0 && std::isfinite(t_total), "t_total must be positive");
  require(renorm_interval > 0.0, "renorm_interval must be positive");
  const double e0 = sys.energy(x);
  Mat q = Mat::Identity(2, 2);
  Vec sums = Vec::Zero(2);
  Vec y = x;
  NormalFrame frame = transversal_frame(sys, y);
  const auto full = static_cast<std::size_t>(std::floor(t_total / renorm_interval));
  const double rest = t_total - static_cast<double>(full) * renorm_interval;
  double drift = 0.0;
  auto advance = [&](double dt) {
    const CocycleSegment seg = tangent_flow(sys.field(), y, dt, opts);
    NormalFrame next = transversal_frame(sys, seg.end);
    sums += detail::qr_renormalize(next.vectors.transpose() * seg.matrix * frame.vectors, q);
    y = seg.end;
    frame = std::move(next);
    drift = std::max(drift, std::abs(sys.energy(y) - e0));
  };
  for (std::size_t k = 0; k < full; ++k) advance(renorm_interval);
  if (rest > 1e-12 * t_total) advance(rest);
  TransversalSpectrum s;
  s.lambda1 = std::max(sums[0], sums[1]) / t_total;
  s.lambda2 = std::min(sums[0], sums[1]) / t_total;
  s.energy_drift = drift;
  s.end = y;
  return s;
}

/// Weighted mean over the level of lambda+ of the transversal cocycle. Runs
/// whose energy drifts by more than 1e-6 are rejected.
inline IntegratedExponent level_exponent(const HamiltonianSystem& sys, double e, std::size_t n_samples,
                                         double t_horizon, std::uint64_t seed,
                                         const IntegratorOptions& opts = hamiltonian_integrator_options(),
                                         const SamplingOptions& sampling = {}) {
  const EnergyLevelSample level = sample_level(sys, e, n_samples, seed, 1e-9, sampling.threads);
  if (!level.regular) {
    std::ostringstream msg;
    msg << "level H = " << e << " contains critical points";
    fail(ErrorCode::CriticalLevel, msg.str());
  }
  const auto runs = parallel_map(level.points.size(), sampling.threads, [&](std::size_t i) {
    ExponentSample s;
    s.x = level.points[i];
    s.weight = level.weights[i];
    try {
      const TransversalSpectrum sp = transversal_spectrum(sys, s.x, t_horizon, sampling.renorm_interval, opts);
      if (sp.energy_drift > detail::kDriftLimit) {
        s.rejected = 1;
        return s;
      }
      s.values = {sp.lambda1, sp.lambda2};
      s.lambda_plus = std::max(sp.lambda1, 0.0);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NonFiniteState && err.code() != ErrorCode::StepUnderflow &&
          err.code() != ErrorCode::CriticalLevel && err.code() != ErrorCode::SingularPoint)
        throw;
      s.rejected = 1;
    }
    return s;
  });
  IntegratedExponent out;
  out.method = IntegratedExponent::Method::LevelTransversal;
  out.t_horizon = t_horizon;
  out.seed = seed;
  out.n_rejected = level.n_failed;
  double wsum = 0.0, mean = 0.0;
  for (const auto& r : runs) {
    if (r.rejected) {
      ++out.n_rejected;
      continue;
    }
    wsum += r.weight;
    mean += r.weight * r.lambda_plus;
    out.samples.push_back(r);
  }
  if (out.samples.empty()) fail(ErrorCode::AllSamplesRejected, "every level orbit was rejected");
  mean /= wsum;
  double var = 0.0;
  for (const auto& r : out.samples) var += r.weight * r.weight * (r.lambda_plus - mean) * (r.lambda_plus - mean);
  out.value = mean;
  out.n_samples = out.samples.size();
  out.std_error = std::sqrt(var) / wsum;
  return out;
}

struct LevelIntegral {
  double value = 0.0;
  double std_error = 0.0;
  std::vector<double> energies;
  std::vector<IntegratedExponent> levels;
};

struct LevelOptions {
  std::size_t n_samples = 16;
  double t_horizon = 100.0;
  std::uint64_t seed = 0;
};

/// Trapezoid rule in e of the level exponents, each level read as the entropy
/// of the level measure.
inline LevelIntegral integrated_level_entropy(const HamiltonianSystem& sys, const std::vector<double>& e_grid,
                                              const LevelOptions& lo,
                                              const IntegratorOptions& opts = hamiltonian_integrator_options(),
                                              const SamplingOptions& sampling = {}) {
  require(!e_grid.empty(), "e_grid must not be empty");
  for (std::size_t k = 1; k < e_grid.size(); ++k) require(e_grid[k] > e_grid[k - 1], "e_grid must be increasing");
  LevelIntegral out;
  out.energies = e_grid;
  std::vector<double> critical;
  for (std::size_t k = 0; k < e_grid.size(); ++k) {
    try {
      out.levels.push_back(
          level_exponent(sys, e_grid[k], lo.n_samples, lo.t_horizon, mix64(lo.seed + k), opts, sampling));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::CriticalLevel) throw;
      critical.push_back(e_grid[k]);
    }
  }
  if (!critical.empty()) {
    std::ostringstream msg;
    msg << "critical levels:";
    for (double e : critical) msg << ' ' << e;
    fail(ErrorCode::CriticalLevel, msg.str());
  }
  double var = 0.0;
  std::vector<double> c(e_grid.size(), 0.0);
  for (std::size_t k = 0; k + 1 < e_grid.size(); ++k) {
    const double h = 0.5 * (e_grid[k + 1] - e_grid[k]);
    c[k] += h;
    c[k + 1] += h;
  }
  for (std::size_t k = 0; k < e_grid.size(); ++k) {
    out.value += c[k] * out.levels[k].value;
    var += c[k] * c[k] * out.levels[k].std_error * out.levels[k].std_error;
  }
  out.std_error = std::sqrt(var);
  return out;
}

}  // namespace pesin_lab
