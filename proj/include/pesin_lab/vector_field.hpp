#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "pesin_lab/types.hpp"

namespace pesin_lab {

/// Points with ||X(x)|| below this are treated as singularities of the field.
inline constexpr double kSingularTol = 1e-12;

/// Identification of the two faces of a non-periodic axis, as in a mapping
/// torus: a point reaching `upper` on `axis` continues from `lower` after the
/// remaining coordinates are sent through `forward`. Tangent vectors pick up
/// the constant Jacobian of the identification.
struct Gluing {
  int axis = 0;
  std::function<Vec(const Vec&)> forward;
  std::function<Vec(const Vec&)> backward;
  Mat forward_jacobian;
  Mat backward_jacobian;
};

/// Smooth vector field on a flat box/torus, with its Jacobian.
///
/// The optional chart metric L(x) makes ||v||_x = |L(x) v|. Normal-bundle
/// constructions (frames, projections) use it; it defaults to the identity.
class VectorField {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;
  using MetricFn = std::function<Mat(const Vec&)>;
  using SupportFn = std::function<bool(const Vec&)>;

  VectorField(std::string name, Domain domain, EvalFn eval, JacobianFn jacobian, bool divergence_free)
      : name_(std::move(name)),
        domain_(std::move(domain)),
        eval_(std::move(eval)),
        jacobian_(std::move(jacobian)),
        divergence_free_(divergence_free) {
    require(domain_.dim() == 3 || domain_.dim() == 4, "vector fields must have dimension 3 or 4");
  }

  const std::string& name() const { return name_; }
  int dim() const { return domain_.dim(); }
  const Domain& domain() const { return domain_; }
  bool divergence_free() const { return divergence_free_; }

  Vec eval(const Vec& x) const { return eval_(x); }
  Mat jacobian(const Vec& x) const { return jacobian_(x); }
  double divergence(const Vec& x) const { return jacobian_(x).trace(); }

  bool is_singular(const Vec& x) const { return eval_(x).norm() < kSingularTol; }

  const std::optional<Gluing>& gluing() const { return gluing_; }
  VectorField& with_gluing(Gluing g) {
    gluing_ = std::move(g);
    return *this;
  }

  bool has_metric() const { return static_cast<bool>(metric_); }
  Mat metric(const Vec& x) const { return metric_ ? metric_(x) : Mat::Identity(dim(), dim()); }
  VectorField& with_metric(MetricFn m) {
    metric_ = std::move(m);
    return *this;
  }

  /// Restricts the sampling measure to an invariant region of the box, e.g. a
  /// sublevel set of a Hamiltonian. Volume samples outside are redrawn.
  bool in_support(const Vec& x) const { return !support_ || support_(x); }
  VectorField& with_support(SupportFn s) {
    support_ = std::move(s);
    return *this;
  }

  /// Canonical representative of a point (periodic wrap, glued face).
  Vec canonical(Vec x) const {
    x = domain_.wrap(std::move(x));
    if (gluing_ && x[gluing_->axis] >= domain_.upper[gluing_->axis]) {
      const int a = gluing_->axis;
      x = gluing_->forward(x);
      x[a] = domain_.lower[a];
      x = domain_.wrap(std::move(x));
    }
    return x;
  }

 private:
  std::string name_;
  Domain domain_;
  EvalFn eval_;
  JacobianFn jacobian_;
  MetricFn metric_;
  SupportFn support_;
  std::optional<Gluing> gluing_;
  bool divergence_free_;
};

struct TrajectoryPoint {
  Vec position;
  double time = 0.0;
};

/// DX^t at `base`.
struct CocycleSegment {
  TrajectoryPoint base;
  double t = 0.0;
  Mat matrix;
  Vec end;
};

}  // namespace pesin_lab
