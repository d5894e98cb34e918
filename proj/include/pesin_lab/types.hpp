#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pesin_lab {

inline constexpr int kMaxDim = 4;

/// Small dense vectors and matrices; storage is inline (no heap) up to 4x4.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

enum class ErrorCode {
  InvalidArgument,
  UnknownSystem,
  DimensionMismatch,
  NonFiniteState,
  StepUnderflow,
  SingularPoint,
  DegenerateSplitting,
  AllSamplesRejected,
  NotInvertible,
  NonPositiveCeiling,
  InsufficientSamples,
  EmptyLevel,
  CriticalLevel,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownSystem: return "UnknownSystem";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::DegenerateSplitting: return "DegenerateSplitting";
    case ErrorCode::AllSamplesRejected: return "AllSamplesRejected";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::NonPositiveCeiling: return "NonPositiveCeiling";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::EmptyLevel: return "EmptyLevel";
    case ErrorCode::CriticalLevel: return "CriticalLevel";
  }
  return "Unknown";
}

/// True for errors caused by bad input rather than by a numerical failure.
constexpr bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownSystem:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonPositiveCeiling:
    case ErrorCode::NotInvertible:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

/// Flat model manifold: an axis-aligned box whose axes are either periodic
/// (torus directions) or plain bounds.
struct Domain {
  Vec lower;
  Vec upper;
  std::vector<bool> periodic;

  int dim() const { return static_cast<int>(lower.size()); }

  static Domain unit_torus(int dim) {
    return Domain{Vec::Zero(dim), Vec::Ones(dim), std::vector<bool>(static_cast<std::size_t>(dim), true)};
  }

  static Domain torus(int dim, double length) {
    return Domain{Vec::Zero(dim), Vec::Constant(dim, length), std::vector<bool>(static_cast<std::size_t>(dim), true)};
  }

  static Domain box(const Vec& lo, const Vec& hi) {
    return Domain{lo, hi, std::vector<bool>(static_cast<std::size_t>(lo.size()), false)};
  }

  double length(int axis) const { return upper[axis] - lower[axis]; }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= length(i);
    return v;
  }

  /// Maps periodic coordinates back into [lower, upper).
  Vec wrap(Vec x) const {
    for (int i = 0; i < dim(); ++i) {
      if (!periodic[static_cast<std::size_t>(i)]) continue;
      const double len = length(i);
      double r = std::fmod(x[i] - lower[i], len);
      if (r < 0.0) r += len;
      if (r >= len) r = 0.0;
      x[i] = lower[i] + r;
    }
    return x;
  }

  bool contains(const Vec& x) const {
    if (x.size() != lower.size()) return false;
    for (int i = 0; i < dim(); ++i) {
      if (!(x[i] >= lower[i] && x[i] < upper[i])) return false;
    }
    return true;
  }
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace pesin_lab
