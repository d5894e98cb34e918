#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pesin_lab/lyapunov.hpp"
#include "pesin_lab/parallel.hpp"
#include "pesin_lab/random.hpp"
#include "pesin_lab/suspension.hpp"

namespace pesin_lab {

/// Regular product grid over a box or torus.
struct PartitionGrid {
  std::vector<int> resolution;
  Domain domain;

  PartitionGrid(std::vector<int> res, Domain d) : resolution(std::move(res)), domain(std::move(d)) {
    if (static_cast<int>(resolution.size()) != domain.dim())
      fail(ErrorCode::DimensionMismatch, "grid resolution does not match the domain dimension");
    double cells = 1.0;
    for (int r : resolution) {
      require(r >= 1, "grid resolution must be positive");
      cells *= r;
    }
    require(cells < 4.0e9, "grid has too many cells");
  }

  std::uint32_t cells() const {
    std::uint32_t n = 1;
    for (int r : resolution) n *= static_cast<std::uint32_t>(r);
    return n;
  }

  /// Mixed-radix index of the cell containing x; points outside are clamped.
  std::uint32_t cell(const Vec& x) const {
    std::uint32_t id = 0;
    for (int i = 0; i < domain.dim(); ++i) {
      const int r = resolution[static_cast<std::size_t>(i)];
      const double u = (x[i] - domain.lower[i]) / domain.length(i);
      const int k = std::clamp(static_cast<int>(std::floor(u * r)), 0, r - 1);
      id = id * static_cast<std::uint32_t>(r) + static_cast<std::uint32_t>(k);
    }
    return id;
  }
};

/// Measurable self-map with a sampler for an invariant probability measure.
struct MapSystem {
  std::string name;
  Domain state_space;
  std::function<Vec(const Vec&)> map;
  std::function<Vec(Rng&)> sampler;
};

inline MapSystem map_system(const BaseSystem& base) { return {base.name, base.state_space, base.map, base.sampler}; }

/// Time-`time_step` map of a flow, with normalized volume as the measure.
inline MapSystem time_map(const VectorField& field, double time_step, const IntegratorOptions& opts = {}) {
  require(time_step > 0.0 && std::isfinite(time_step), "time_step must be positive");
  auto f = std::make_shared<const VectorField>(field);
  return {field.name(), field.domain(), [f, time_step, opts](const Vec& x) { return flow(*f, x, time_step, opts).position; },
          [f](Rng& rng) { return detail::sample_volume(*f, rng); }};
}

/// Time-`time_step` map of a suspension semiflow on (x, r) coordinates.
inline MapSystem time_map(const SuspensionSystem& sys, double time_step) {
  require(time_step > 0.0 && std::isfinite(time_step), "time_step must be positive");
  auto s = std::make_shared<const SuspensionSystem>(sys);
  const int d = sys.base().dim();
  Domain dom = sys.base().state_space;
  dom.lower.conservativeResize(d + 1);
  dom.upper.conservativeResize(d + 1);
  dom.lower[d] = 0.0;
  dom.upper[d] = sys.ceiling().h_max;
  dom.periodic.push_back(false);
  auto pack = [d](const SuspensionPoint& p) {
    Vec v(d + 1);
    v.head(d) = p.base_point;
    v[d] = p.height;
    return v;
  };
  return {"suspension(" + sys.base().name + ", " + sys.ceiling().spec + ")", std::move(dom),
          [s, d, pack, time_step](const Vec& v) {
            return pack(s->evolve({v.head(d), v[d]}, time_step));
          },
          [s, pack](Rng& rng) { return pack(s->sample(rng)); }};
}

struct EntropyLevel {
  int n = 0;
  double h_n = 0.0;          // H(P^(n)), Miller-Madow corrected
  double h_n_over_n = 0.0;   // H_n / n
  double conditional = 0.0;  // H_n - H_{n-1} over the same n-windows
  double conditional_stderr = 0.0;
  std::size_t occupied = 0;
  std::size_t samples = 0;
  bool resolved = false;
};

struct EntropyEstimate {
  enum class Method { PartitionRefinement, AbramovTransfer };

  double value = 0.0;  // nats per unit time
  int n_depth = 0;
  std::size_t n_orbits = 0;
  std::size_t orbit_length = 0;
  double time_step = 1.0;
  double std_error = 0.0;
  double bias_bound = 0.0;
  std::uint64_t seed = 0;
  Method method = Method::PartitionRefinement;
  std::vector<EntropyLevel> diagnostics;
};

inline std::string to_string(EntropyEstimate::Method m) {
  return m == EntropyEstimate::Method::PartitionRefinement ? "partition_refinement" : "abramov_transfer";
}

struct EntropyOptions {
  std::vector<int> resolution;
  /// Region covered by the grid; the system's state space when unset.
  std::optional<Domain> grid_domain;
  double time_step = 1.0;
  int n_max = 10;
  std::size_t n_orbits = 100;
  std::size_t orbit_length = 10'000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// A depth n is resolved when its windows number at least this many times
  /// its occupied n-cylinders.
  double resolve_factor = 5.0;
};

namespace detail {

inline constexpr std::uint64_t kOrbitStream = 0x6f72626974ULL;
inline constexpr double kInsufficientFactor = 10.0;

inline double miller_madow(const std::vector<std::uint64_t>& counts, double total, std::size_t& occupied) {
  double h = 0.0;
  occupied = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    ++occupied;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h + (static_cast<double>(occupied) - 1.0) / (2.0 * total);
}

}  // namespace detail

/// Entropy of `sys` relative to `grid`, from itineraries of sampled orbits.
///
/// H_n is the corrected entropy of the empirical n-cylinder distribution. The
/// estimate is the smallest conditional increment H_n - H_{n-1} over resolved
/// depths n <= n_max; both H_n/n and the increment decrease to h(P) and the
/// increment converges much faster. bias_bound = H_n/n - increment at the
/// selected depth.
inline EntropyEstimate refined_entropy(const MapSystem& sys, const PartitionGrid& grid, int n_max,
                                       std::size_t n_orbits, std::size_t orbit_length, std::uint64_t seed,
                                       std::size_t threads = 1, double resolve_factor = 5.0) {
  require(n_max >= 1, "n_max must be at least 1");
  require(n_orbits >= 1, "n_orbits must be at least 1");
  require(orbit_length >= static_cast<std::size_t>(n_max), "orbit_length must be at least n_max");
  if (grid.domain.dim() != sys.state_space.dim())
    fail(ErrorCode::DimensionMismatch, "grid dimension does not match the system");

  const std::size_t len = orbit_length;
  const auto orbits = parallel_map(n_orbits, threads, [&](std::size_t i) {
    Rng rng = substream(seed, i, detail::kOrbitStream);
    Vec x = sys.sampler(rng);
    std::vector<std::uint32_t> symbols(len);
    for (std::size_t t = 0; t < len; ++t) {
      symbols[t] = grid.cell(x);
      if (t + 1 < len) x = sys.map(x);
    }
    return symbols;
  });

  EntropyEstimate est;
  est.n_orbits = n_orbits;
  est.orbit_length = orbit_length;
  est.seed = seed;

  // ids[o][t] = dense label of the (n-1)-window starting at t of orbit o.
  std::vector<std::vector<std::uint32_t>> ids(n_orbits);
  std::unordered_map<std::uint32_t, std::uint32_t> base_labels;
  for (std::size_t o = 0; o < n_orbits; ++o) {
    ids[o].resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      auto [it, fresh] = base_labels.try_emplace(orbits[o][t], static_cast<std::uint32_t>(base_labels.size()));
      ids[o][t] = it->second;
    }
  }
  const double base_windows = static_cast<double>(n_orbits * (len - static_cast<std::size_t>(n_max) + 1));
  if (base_windows < detail::kInsufficientFactor * static_cast<double>(base_labels.size()))
    fail(ErrorCode::InsufficientSamples, "fewer than 10 windows per occupied grid cell at depth n_max");

  std::vector<std::uint32_t> prefix_of;  // n-cylinder label -> (n-1)-cylinder label
  std::size_t prev_labels = base_labels.size();
  for (int n = 1; n <= n_max; ++n) {
    const std::size_t windows_per = len - static_cast<std::size_t>(n) + 1;
    const double total = static_cast<double>(n_orbits * windows_per);
    std::vector<std::uint64_t> counts;
    if (n == 1) {
      counts.assign(prev_labels, 0);
      prefix_of.assign(prev_labels, 0);
      for (std::size_t o = 0; o < n_orbits; ++o) {
        for (std::size_t t = 0; t < windows_per; ++t) ++counts[ids[o][t]];
      }
    } else {
      std::unordered_map<std::uint64_t, std::uint32_t> labels;
      labels.reserve(prev_labels * 2);
      prefix_of.clear();
      for (std::size_t o = 0; o < n_orbits; ++o) {
        auto& row = ids[o];
        const auto& sym = orbits[o];
        for (std::size_t t = 0; t < windows_per; ++t) {
          const std::uint64_t key = (static_cast<std::uint64_t>(row[t]) << 32) | sym[t + static_cast<std::size_t>(n) - 1];
          auto [it, fresh] = labels.try_emplace(key, static_cast<std::uint32_t>(labels.size()));
          if (fresh) {
            counts.push_back(0);
            prefix_of.push_back(row[t]);
          }
          ++counts[it->second];
          row[t] = it->second;
        }
      }
      prev_labels = labels.size();
    }

    EntropyLevel lvl;
    lvl.n = n;
    lvl.samples = static_cast<std::size_t>(total);
    lvl.h_n = detail::miller_madow(counts, total, lvl.occupied);
    lvl.h_n_over_n = lvl.h_n / n;
    std::vector<std::uint64_t> prefix_counts;
    if (n == 1) {
      lvl.conditional = lvl.h_n;
      prefix_counts.assign(1, static_cast<std::uint64_t>(total));
      std::fill(prefix_of.begin(), prefix_of.end(), 0);
    } else {
      prefix_counts.assign(*std::max_element(prefix_of.begin(), prefix_of.end()) + 1, 0);
      for (std::size_t k = 0; k < counts.size(); ++k) prefix_counts[prefix_of[k]] += counts[k];
      std::size_t prefix_occupied = 0;
      lvl.conditional = lvl.h_n - detail::miller_madow(prefix_counts, total, prefix_occupied);
    }
    // Sampling error from the spread of -log p(last symbol | prefix).
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] == 0) continue;
      const double w = static_cast<double>(counts[k]) / total;
      const double s = -std::log(static_cast<double>(counts[k]) / static_cast<double>(prefix_counts[prefix_of[k]]));
      m1 += w * s;
      m2 += w * s * s;
    }
    lvl.conditional_stderr = std::sqrt(std::max(0.0, m2 - m1 * m1) / total);
    lvl.resolved = total >= resolve_factor * static_cast<double>(lvl.occupied);
    est.diagnostics.push_back(lvl);
  }

  const EntropyLevel* best = nullptr;
  // H_1 alone is a static partition entropy, not a rate; a conditional
  // increment (n >= 2) is required whenever n_max allows one.
  const int min_depth = n_max >= 2 ? 2 : 1;
  for (const auto& lvl : est.diagnostics) {
    if (!lvl.resolved || lvl.n < min_depth) continue;
    if (!best || lvl.conditional <= best->conditional) best = &lvl;
  }
  if (!best) fail(ErrorCode::InsufficientSamples, "no refinement depth n >= 2 is resolved by the sample");
  est.value = std::max(0.0, best->conditional);
  est.n_depth = best->n;
  est.std_error = best->conditional_stderr;
  est.bias_bound = std::max(0.0, best->h_n_over_n - best->conditional);
  return est;
}


/// Entropy per unit time of a flow, measured through its time-`time_step` map.
inline EntropyEstimate flow_entropy(const VectorField& field, const EntropyOptions& o,
                                    const IntegratorOptions& opts = {}) {
  const PartitionGrid grid(o.resolution, o.grid_domain.value_or(field.domain()));
  EntropyEstimate est = refined_entropy(time_map(field, o.time_step, opts), grid, o.n_max, o.n_orbits,
                                        o.orbit_length, o.seed, o.threads, o.resolve_factor);
  est.time_step = o.time_step;
  est.value /= o.time_step;
  est.std_error /= o.time_step;
  est.bias_bound /= o.time_step;
  return est;
}

/// Same for a suspension semiflow; the grid covers base x [0, h_max).
inline EntropyEstimate flow_entropy(const SuspensionSystem& sys, const EntropyOptions& o) {
  const MapSystem m = time_map(sys, o.time_step);
  const PartitionGrid grid(o.resolution, o.grid_domain.value_or(m.state_space));
  EntropyEstimate est =
      refined_entropy(m, grid, o.n_max, o.n_orbits, o.orbit_length, o.seed, o.threads, o.resolve_factor);
  est.time_step = o.time_step;
  est.value /= o.time_step;
  est.std_error /= o.time_step;
  est.bias_bound /= o.time_step;
  return est;
}

/// Suspension entropy from an estimate of the base-map entropy divided by int h.
inline EntropyEstimate abramov_transfer(const SuspensionSystem& sys, const EntropyOptions& o) {
  const MapSystem m = map_system(sys.base());
  const PartitionGrid grid(o.resolution, o.grid_domain.value_or(m.state_space));
  EntropyEstimate est =
      refined_entropy(m, grid, o.n_max, o.n_orbits, o.orbit_length, o.seed, o.threads, o.resolve_factor);
  const double mean = sys.integral_estimate();
  const double rel = sys.integral_stderr() / mean;
  est.method = EntropyEstimate::Method::AbramovTransfer;
  est.std_error = std::hypot(est.std_error / mean, est.value / mean * rel);
  est.value /= mean;
  est.bias_bound /= mean;
  return est;
}

struct LyapunovOptions {
  std::size_t n_samples = 64;
  double t_horizon = 200.0;
  std::uint64_t seed = 0;
  double renorm_interval = 0.5;
  std::size_t threads = 1;
};

/// Entropy against integrated positive exponent for one system.
struct PesinReport {
  EntropyEstimate entropy;
  IntegratedExponent exponent;
  double h_est = 0.0;
  double lambda_est = 0.0;
  double difference = 0.0;  // h_est - lambda_est
  double combined_stderr = 0.0;
  double tolerance = 0.0;   // 3 (combined stderr + bias bound)
  bool violation = false;   // h_est > lambda_est + tolerance
  double relative_gap = 0.0;  // |difference| / lambda_est, 0 when lambda_est = 0
};

inline PesinReport pesin_report(const VectorField& field, const EntropyOptions& eo, const LyapunovOptions& lo,
                                const IntegratorOptions& opts = {}) {
  require(field.divergence_free(), "pesin_report needs a divergence-free field");
  PesinReport r;
  r.entropy = flow_entropy(field, eo, opts);
  r.exponent = integrated_exponent(field, lo.n_samples, lo.t_horizon, lo.seed, opts,
                                   SamplingOptions{lo.threads, lo.renorm_interval});
  r.h_est = r.entropy.value;
  r.lambda_est = r.exponent.value;
  r.difference = r.h_est - r.lambda_est;
  r.combined_stderr = std::hypot(r.entropy.std_error, r.exponent.std_error);
  r.tolerance = 3.0 * (r.combined_stderr + r.entropy.bias_bound);
  r.violation = r.h_est > r.lambda_est + r.tolerance;
  r.relative_gap = r.lambda_est > 0.0 ? std::abs(r.difference) / r.lambda_est : 0.0;
  return r;
}

}  // namespace pesin_lab
