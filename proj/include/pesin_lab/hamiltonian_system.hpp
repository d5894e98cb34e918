#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "pesin_lab/polynomial.hpp"
#include "pesin_lab/vector_field.hpp"

namespace pesin_lab {

/// Standard symplectic matrix on R^4 in (q1, p1, q2, p2) order. X_H = J grad H,
/// and omega(a, b) = a^T J b satisfies omega(X_H, v) = DH v.
inline Mat symplectic_matrix() {
  Mat j = Mat::Zero(4, 4);
  j(0, 1) = 1.0;
  j(1, 0) = -1.0;
  j(2, 3) = 1.0;
  j(3, 2) = -1.0;
  return j;
}

inline double symplectic_form(const Vec& a, const Vec& b) { return a.dot(symplectic_matrix() * b); }

/// A Hamiltonian on R^4: energy, gradient, Hessian, and the induced field.
struct HamiltonianSpec {
  std::string name;
  std::function<double(const Vec&)> energy;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  /// Working box for sampling and the energy bound of the invariant sublevel
  /// set used as the volume measure.
  double box_half_width = 12.0;
  double support_energy = 2.0;
};

class HamiltonianSystem {
 public:
  explicit HamiltonianSystem(HamiltonianSpec spec) : spec_(std::make_shared<const HamiltonianSpec>(std::move(spec))) {
    const auto s = spec_;
    const Mat j = symplectic_matrix();
    const Vec half = Vec::Constant(4, s->box_half_width);
    VectorField f(
        s->name, Domain::box(-half, half), [s, j](const Vec& x) -> Vec { return j * s->gradient(x); },
        [s, j](const Vec& x) -> Mat { return j * s->hessian(x); }, true);
    const double e_max = s->support_energy;
    f.with_support([s, e_max](const Vec& x) { return s->energy(x) <= e_max; });
    field_ = std::make_shared<const VectorField>(std::move(f));
  }

  const std::string& name() const { return spec_->name; }
  double energy(const Vec& x) const { return spec_->energy(x); }
  Vec gradient(const Vec& x) const { return spec_->gradient(x); }
  Mat hessian(const Vec& x) const { return spec_->hessian(x); }
  const VectorField& field() const { return *field_; }
  const HamiltonianSpec& spec() const { return *spec_; }
  static Mat symplectic() { return symplectic_matrix(); }

 private:
  std::shared_ptr<const HamiltonianSpec> spec_;
  std::shared_ptr<const VectorField> field_;
};

/// H = (q1^2 + p1^2 + q2^2 + p2^2) / 2.
inline HamiltonianSpec harmonic4_spec() {
  HamiltonianSpec s;
  s.name = "harmonic4";
  s.energy = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  s.gradient = [](const Vec& x) -> Vec { return x; };
  s.hessian = [](const Vec&) -> Mat { return Mat::Identity(4, 4); };
  return s;
}

/// H = (p1^2 + p2^2 + q1^2 + q2^2) / 2 + q1^2 q2^2.
inline HamiltonianSpec coupled_quartic4_spec() {
  HamiltonianSpec s;
  s.name = "coupled_quartic4";
  s.energy = [](const Vec& x) {
    const double q1 = x[0], q2 = x[2];
    return 0.5 * x.squaredNorm() + q1 * q1 * q2 * q2;
  };
  s.gradient = [](const Vec& x) -> Vec {
    const double q1 = x[0], q2 = x[2];
    Vec g = x;
    g[0] += 2.0 * q1 * q2 * q2;
    g[2] += 2.0 * q1 * q1 * q2;
    return g;
  };
  s.hessian = [](const Vec& x) -> Mat {
    const double q1 = x[0], q2 = x[2];
    Mat h = Mat::Identity(4, 4);
    h(0, 0) += 2.0 * q2 * q2;
    h(2, 2) += 2.0 * q1 * q1;
    h(0, 2) = h(2, 0) = 4.0 * q1 * q2;
    return h;
  };
  return s;
}

inline HamiltonianSpec polynomial_hamiltonian_spec(std::string name, const Polynomial& h, double box_half_width,
                                                   double support_energy) {
  if (h.dim() != 4) fail(ErrorCode::DimensionMismatch, "Hamiltonian systems are defined on R^4 only");
  auto poly = std::make_shared<const Polynomial>(h);
  auto grad = std::make_shared<std::vector<Polynomial>>();
  auto hess = std::make_shared<std::vector<Polynomial>>();
  for (int i = 0; i < 4; ++i) grad->push_back(h.derivative(i));
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) hess->push_back((*grad)[static_cast<std::size_t>(i)].derivative(k));
  }
  HamiltonianSpec s;
  s.name = std::move(name);
  s.energy = [poly](const Vec& x) { return (*poly)(x); };
  s.gradient = [grad](const Vec& x) -> Vec {
    Vec g(4);
    for (int i = 0; i < 4; ++i) g[i] = (*grad)[static_cast<std::size_t>(i)](x);
    return g;
  };
  s.hessian = [hess](const Vec& x) -> Mat {
    Mat m(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 4; ++k) m(i, k) = (*hess)[static_cast<std::size_t>(4 * i + k)](x);
    }
    return m;
  };
  s.box_half_width = box_half_width;
  s.support_energy = support_energy;
  return s;
}

}  // namespace pesin_lab
