#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "pesin_lab/types.hpp"

namespace pesin_lab {

/// Sparse multivariate polynomial in up to four variables.
class Polynomial {
 public:
  using Exponents = std::array<int, kMaxDim>;

  struct Term {
    Exponents exps{};
    double coef = 0.0;
  };

  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) {}

  Polynomial(int dim, const std::vector<Term>& terms) : dim_(dim) {
    for (const auto& t : terms) add(t.exps, t.coef);
  }

  int dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }

  void add(const Exponents& e, double c) {
    for (int i = 0; i < kMaxDim; ++i) {
      require(e[static_cast<std::size_t>(i)] >= 0, "polynomial exponents must be non-negative");
      require(i < dim_ || e[static_cast<std::size_t>(i)] == 0, "exponent tuple longer than the dimension");
    }
    for (auto& t : terms_) {
      if (t.exps == e) {
        t.coef += c;
        return;
      }
    }
    terms_.push_back({e, c});
  }

  double operator()(const Vec& x) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (int i = 0; i < dim_; ++i) {
        for (int k = 0; k < t.exps[static_cast<std::size_t>(i)]; ++k) v *= x[i];
      }
      s += v;
    }
    return s;
  }

  Polynomial derivative(int axis) const {
    Polynomial d(dim_);
    for (const auto& t : terms_) {
      const int e = t.exps[static_cast<std::size_t>(axis)];
      if (e == 0) continue;
      Exponents ne = t.exps;
      ne[static_cast<std::size_t>(axis)] = e - 1;
      d.add(ne, t.coef * e);
    }
    return d;
  }

  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    for (const auto& t : o.terms_) r.add(t.exps, t.coef);
    return r;
  }

  /// True when every coefficient cancels to within `tol`.
  bool is_zero(double tol = 1e-12) const {
    for (const auto& t : terms_) {
      if (std::abs(t.coef) > tol) return false;
    }
    return true;
  }

 private:
  int dim_ = 0;
  std::vector<Term> terms_;
};

}  // namespace pesin_lab
