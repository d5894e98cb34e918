#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pesin_lab/random.hpp"
#include "pesin_lab/systems.hpp"

namespace pesin_lab {

/// Invertible (or not) measurable map R on a flat torus, with a sampler for
/// an R-invariant probability measure.
struct BaseSystem {
  std::string name;
  Domain state_space;
  std::function<Vec(const Vec&)> map;
  std::optional<std::function<Vec(const Vec&)>> inverse;
  std::function<Vec(Rng&)> sampler;
  std::optional<double> known_entropy;

  int dim() const { return state_space.dim(); }
  bool invertible() const { return inverse.has_value(); }
};

namespace detail {

inline std::function<Vec(Rng&)> uniform_torus_sampler(int dim) {
  return [dim](Rng& rng) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = uniform01(rng);
    return x;
  };
}

inline Vec wrap_unit(Vec x) {
  for (int i = 0; i < x.size(); ++i) {
    x[i] = std::fmod(x[i], 1.0);
    if (x[i] < 0.0) x[i] += 1.0;
    if (x[i] >= 1.0) x[i] = 0.0;
  }
  return x;
}

inline double torus_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace detail

/// Cat map (x, y) -> (2x + y, x + y) mod 1; volume-preserving, entropy log(lambda).
inline BaseSystem cat_base() {
  return {"cat", Domain::unit_torus(2), cat_map, cat_map_inverse, detail::uniform_torus_sampler(2),
          std::log(kCatLambda)};
}

/// Translation by `shift` on the unit torus of matching dimension.
inline BaseSystem rotation_base(const Vec& shift) {
  const int dim = static_cast<int>(shift.size());
  return {"rotation",
          Domain::unit_torus(dim),
          [shift](const Vec& x) { return detail::wrap_unit(x + shift); },
          [shift](const Vec& x) { return detail::wrap_unit(x - shift); },
          detail::uniform_torus_sampler(dim),
          0.0};
}

/// Default irrational rotation of the 2-torus.
inline BaseSystem rotation_base() {
  return rotation_base((Vec(2) << (std::sqrt(5.0) - 1.0) / 2.0, std::sqrt(2.0) - 1.0).finished());
}

inline BaseSystem identity_base(int dim = 2) {
  return {"identity", Domain::unit_torus(dim), [](const Vec& x) { return x; }, [](const Vec& x) { return x; },
          detail::uniform_torus_sampler(dim), 0.0};
}

inline BaseSystem base_by_name(const std::string& name) {
  if (name == "cat") return cat_base();
  if (name == "rotation") return rotation_base();
  if (name == "identity") return identity_base();
  fail(ErrorCode::UnknownSystem, "no base map named '" + name + "' (expected cat, rotation, identity)");
}

/// Roof function h >= alpha > 0 over the base.
struct Ceiling {
  std::string spec;
  std::function<double(const Vec&)> h;
  double alpha = 0.0;
  double h_max = 0.0;

  static Ceiling constant(double c) {
    return {"const:" + std::to_string(c), [c](const Vec&) { return c; }, c, c};
  }

  /// h = a + b cos(2 pi x_0), requires a > b >= 0.
  static Ceiling cosine(double a, double b) {
    if (!(b >= 0.0 && a > b)) fail(ErrorCode::NonPositiveCeiling, "cosine ceiling needs a > b >= 0");
    return {"cosine:" + std::to_string(a) + "," + std::to_string(b),
            [a, b](const Vec& x) { return a + b * std::cos(2.0 * std::numbers::pi * x[0]); }, a - b, a + b};
  }
};

/// Parses "const:c" or "cosine:a,b".
inline Ceiling parse_ceiling(const std::string& text) {
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      fail(ErrorCode::InvalidArgument, "bad number in ceiling '" + text + "'");
    return v;
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorCode::InvalidArgument, "ceiling must look like const:c or cosine:a,b");
  const std::string kind = text.substr(0, colon);
  const std::string_view args = std::string_view(text).substr(colon + 1);
  if (kind == "const") {
    const double c = number(args);
    if (!(c > 0.0)) fail(ErrorCode::NonPositiveCeiling, "constant ceiling must be positive");
    Ceiling out = Ceiling::constant(c);
    out.spec = text;
    return out;
  }
  if (kind == "cosine") {
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) fail(ErrorCode::InvalidArgument, "cosine ceiling needs a,b");
    Ceiling out = Ceiling::cosine(number(args.substr(0, comma)), number(args.substr(comma + 1)));
    out.spec = text;
    return out;
  }
  fail(ErrorCode::InvalidArgument, "unknown ceiling kind '" + kind + "'");
}

/// Point (x, r) of M_h, canonical with 0 <= r < h(x).
struct SuspensionPoint {
  Vec base_point;
  double height = 0.0;
};

/// Suspension (semi)flow of a base map under a ceiling.
class SuspensionSystem {
 public:
  static constexpr std::size_t kIntegralSamples = 1 << 16;
  static constexpr std::uint64_t kIntegralStream = 0x726f6f66ULL;

  SuspensionSystem(BaseSystem base, Ceiling ceiling)
      : base_(std::make_shared<const BaseSystem>(std::move(base))), ceiling_(std::move(ceiling)) {
    if (!(ceiling_.alpha > 0.0)) fail(ErrorCode::NonPositiveCeiling, "ceiling lower bound alpha must be positive");
    // Monte-Carlo estimate of the integral of h over eta; also spot-checks alpha.
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < kIntegralSamples; ++i) {
      Rng rng = substream(0, i, kIntegralStream);
      const double v = ceiling_.h(base_->sampler(rng));
      if (v < ceiling_.alpha) fail(ErrorCode::NonPositiveCeiling, "ceiling falls below its declared alpha");
      if (v > ceiling_.h_max) fail(ErrorCode::InvalidArgument, "ceiling exceeds its declared maximum");
      sum += v;
      sumsq += v * v;
    }
    const double n = static_cast<double>(kIntegralSamples);
    integral_ = sum / n;
    integral_stderr_ = std::sqrt(std::max(0.0, sumsq / n - integral_ * integral_) / (n - 1.0));
  }

  const BaseSystem& base() const { return *base_; }
  const Ceiling& ceiling() const { return ceiling_; }
  bool is_flow() const { return base_->invertible(); }
  double integral_estimate() const { return integral_; }
  double integral_stderr() const { return integral_stderr_; }

  /// S^s(x, r) = (R^n x, r + s - sum_{i<n} h(R^i x)) with n fixed by the
  /// Birkhoff sums of h; negative s walks backwards through R^{-1}.
  SuspensionPoint evolve(const SuspensionPoint& p, double s) const {
    const auto& h = ceiling_.h;
    Vec x = p.base_point;
    if (!(p.height >= 0.0 && p.height < h(x))) fail(ErrorCode::InvalidArgument, "height outside [0, h(x))");
    const double total = p.height + s;
    if (total >= 0.0) {
      double acc = 0.0;
      for (double hx = h(x); total >= acc + hx; hx = h(x)) {
        acc += hx;
        x = base_->map(x);
      }
      return {std::move(x), total - acc};
    }
    if (!base_->inverse) fail(ErrorCode::NotInvertible, "negative time needs an invertible base map");
    double acc = 0.0;
    while (total + acc < 0.0) {
      x = (*base_->inverse)(x);
      acc += h(x);
    }
    double r = total + acc;
    if (r >= h(x)) {
      r -= h(x);
      x = base_->map(x);
    }
    return {std::move(x), r};
  }

  /// Draw from (eta x Leb)/int h by rejection under h_max.
  SuspensionPoint sample(Rng& rng) const {
    for (;;) {
      Vec x = base_->sampler(rng);
      const double u = uniform(rng, 0.0, ceiling_.h_max);
      if (u < ceiling_.h(x)) return {std::move(x), u};
    }
  }

 private:
  std::shared_ptr<const BaseSystem> base_;
  Ceiling ceiling_;
  double integral_ = 0.0;
  double integral_stderr_ = 0.0;
};

inline SuspensionSystem suspend(BaseSystem base, Ceiling ceiling) {
  return SuspensionSystem(std::move(base), std::move(ceiling));
}

inline SuspensionPoint evolve(const SuspensionSystem& sys, const SuspensionPoint& p, double s) {
  return sys.evolve(p, s);
}

inline constexpr std::uint64_t kLiftStream = 0x6c696674ULL;

/// `count` samples of the lifted invariant measure; sample i uses its own substream.
inline std::vector<SuspensionPoint> lift_measure_sample(const SuspensionSystem& sys, std::uint64_t seed,
                                                        std::size_t count) {
  std::vector<SuspensionPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = substream(seed, i, kLiftStream);
    out.push_back(sys.sample(rng));
  }
  return out;
}

/// Entropy of the suspension flow predicted from the base entropy: h(R) / int h.
inline double abramov_check(const SuspensionSystem& sys, double base_entropy) {
  return base_entropy / sys.integral_estimate();
}

struct ExpansivityReport {
  double delta = 0.0;
  std::size_t pairs = 0;
  std::size_t separated = 0;
  int horizon = 0;
  double fraction = 0.0;
  double mean_separation_steps = 0.0;  // over separated pairs
};

inline constexpr std::uint64_t kProbeStream = 0x70726f6265ULL;

/// Fraction of delta-close pairs whose orbits separate beyond delta within
/// +/- horizon iterates. Pairs where y lies on x's own orbit segment are redrawn.
inline ExpansivityReport expansivity_probe(const BaseSystem& base, double delta, std::size_t pairs, int horizon,
                                           std::uint64_t seed) {
  if (!base.inverse) fail(ErrorCode::NotInvertible, "expansivity probe needs an invertible base map");
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 0.5)");
  require(horizon >= 1, "horizon must be positive");
  ExpansivityReport rep;
  rep.delta = delta;
  rep.horizon = horizon;
  const int dim = base.dim();
  double steps_sum = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    Rng rng = substream(seed, i, kProbeStream);
    Vec x, y;
    for (;;) {
      x = base.sampler(rng);
      Vec dir(dim);
      for (int k = 0; k < dim; ++k) dir[k] = uniform(rng, -1.0, 1.0);
      if (dir.norm() < 1e-3) continue;
      y = detail::wrap_unit(x + (uniform01(rng) * delta / dir.norm()) * dir);
      const double d0 = detail::torus_distance(x, y);
      if (d0 < 1e-14 || d0 >= delta) continue;
      bool on_orbit = false;
      Vec f = x, b = x;
      for (int k = 1; k <= horizon && !on_orbit; ++k) {
        f = base.map(f);
        b = (*base.inverse)(b);
        on_orbit = detail::torus_distance(f, y) < 1e-12 || detail::torus_distance(b, y) < 1e-12;
      }
      if (!on_orbit) break;
    }
    Vec fx = x, fy = y, bx = x, by = y;
    int when = 0;
    for (int k = 1; k <= horizon; ++k) {
      fx = base.map(fx);
      fy = base.map(fy);
      bx = (*base.inverse)(bx);
      by = (*base.inverse)(by);
      if (detail::torus_distance(fx, fy) > delta || detail::torus_distance(bx, by) > delta) {
        when = k;
        break;
      }
    }
    if (when > 0) {
      ++rep.separated;
      steps_sum += when;
    }
  }
  rep.pairs = pairs;
  rep.fraction = pairs ? static_cast<double>(rep.separated) / static_cast<double>(pairs) : 0.0;
  rep.mean_separation_steps = rep.separated ? steps_sum / static_cast<double>(rep.separated) : 0.0;
  return rep;
}

}  // namespace pesin_lab
