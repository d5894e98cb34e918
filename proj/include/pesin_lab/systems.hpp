#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pesin_lab/hamiltonian_system.hpp"
#include "pesin_lab/polynomial.hpp"
#include "pesin_lab/vector_field.hpp"

namespace pesin_lab {

/// Largest eigenvalue of the cat matrix [[2,1],[1,1]].
inline const double kCatLambda = (3.0 + std::sqrt(5.0)) / 2.0;

/// A loaded system: a vector field, plus its Hamiltonian when it has one.
struct System {
  VectorField field;
  std::optional<HamiltonianSystem> hamiltonian;
  /// Default partition for entropy estimates: per-axis cells over `entropy_domain`.
  std::vector<int> entropy_resolution;
  Domain entropy_domain;
};

namespace detail {

inline System make_system(VectorField f, std::optional<HamiltonianSystem> h = std::nullopt) {
  const int d = f.dim();
  Domain grid = f.domain();
  std::vector<int> res(static_cast<std::size_t>(d), d == 4 ? 6 : 8);
  if (h) {
    // The volume measure lives on the sublevel H <= support_energy; for the
    // built-ins (H >= |x|^2 / 2) that set lies in the cube of half-width sqrt(2 e).
    const double r = std::sqrt(2.0 * h->spec().support_energy);
    grid = Domain::box(Vec::Constant(d, -r), Vec::Constant(d, r));
  }
  return {std::move(f), std::move(h), std::move(res), std::move(grid)};
}

}  // namespace detail

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"zero3",     "constant3",       "abc", "cat_suspension3",
                                                 "harmonic4", "coupled_quartic4"};
  return names;
}

inline VectorField zero_field(int dim = 3) {
  return VectorField(
      "zero3", Domain::unit_torus(dim), [dim](const Vec&) -> Vec { return Vec::Zero(dim); },
      [dim](const Vec&) -> Mat { return Mat::Zero(dim, dim); }, true);
}

inline VectorField constant_field(const Vec& c, std::string name = "constant3") {
  const int dim = static_cast<int>(c.size());
  return VectorField(
      std::move(name), Domain::unit_torus(dim), [c](const Vec&) -> Vec { return c; },
      [dim](const Vec&) -> Mat { return Mat::Zero(dim, dim); }, true);
}

/// Arnold-Beltrami-Childress flow on the 2pi-torus.
inline VectorField abc_field(double a = 1.0, double b = 1.0, double c = 1.0) {
  return VectorField(
      "abc", Domain::torus(3, 2.0 * std::numbers::pi),
      [a, b, c](const Vec& x) -> Vec {
        Vec v(3);
        v << a * std::sin(x[2]) + c * std::cos(x[1]), b * std::sin(x[0]) + a * std::cos(x[2]),
            c * std::sin(x[1]) + b * std::cos(x[0]);
        return v;
      },
      [a, b, c](const Vec& x) -> Mat {
        Mat j(3, 3);
        j << 0.0, -c * std::sin(x[1]), a * std::cos(x[2]),  //
            b * std::cos(x[0]), 0.0, -a * std::sin(x[2]),   //
            -b * std::sin(x[0]), c * std::cos(x[1]), 0.0;
        return j;
      },
      true);
}

inline Mat cat_matrix() {
  Mat c(2, 2);
  c << 2.0, 1.0, 1.0, 1.0;
  return c;
}

inline Vec cat_map(const Vec& p) {
  Vec q(2);
  q[0] = std::fmod(2.0 * p[0] + p[1], 1.0);
  q[1] = std::fmod(p[0] + p[1], 1.0);
  for (int i = 0; i < 2; ++i) {
    if (q[i] < 0.0) q[i] += 1.0;
  }
  return q;
}

inline Vec cat_map_inverse(const Vec& p) {
  Vec q(2);
  q[0] = std::fmod(p[0] - p[1], 1.0);
  q[1] = std::fmod(2.0 * p[1] - p[0], 1.0);
  for (int i = 0; i < 2; ++i) {
    if (q[i] < 0.0) q[i] += 1.0;
  }
  return q;
}

/// Mapping torus of the cat map: unit upward flow on [0,1)^3 with
/// (x, y, 1) identified with (cat(x, y), 0).
///
/// The normal-bundle metric is the standard left-invariant metric of the
/// mapping torus, lambda^{2z} du^2 + lambda^{-2z} ds^2 in the unstable/stable
/// eigen-coordinates (u, s). It is continuous across the glued face, so the
/// linear Poincare flow expands uniformly at rate log(lambda) instead of only
/// at the gluing instants.
inline VectorField cat_suspension_field() {
  Domain dom = Domain::unit_torus(3);
  dom.periodic[2] = false;
  VectorField f(
      "cat_suspension3", dom, [](const Vec&) -> Vec { return Vec::Unit(3, 2); },
      [](const Vec&) -> Mat { return Mat::Zero(3, 3); }, true);

  Gluing g;
  g.axis = 2;
  g.forward = [](const Vec& x) -> Vec {
    Vec y = x;
    y.head(2) = cat_map(x.head(2));
    return y;
  };
  g.backward = [](const Vec& x) -> Vec {
    Vec y = x;
    y.head(2) = cat_map_inverse(x.head(2));
    return y;
  };
  g.forward_jacobian = Mat::Identity(3, 3);
  g.forward_jacobian.topLeftCorner(2, 2) = cat_matrix();
  g.backward_jacobian = Mat::Identity(3, 3);
  g.backward_jacobian.topLeftCorner(2, 2) = cat_matrix().inverse();
  f.with_gluing(std::move(g));

  // Columns: unit unstable and stable eigenvectors of the cat matrix.
  Mat eig(2, 2);
  const double lam = kCatLambda;
  eig << 1.0, 1.0, lam - 2.0, 1.0 / lam - 2.0;
  eig.col(0).normalize();
  eig.col(1).normalize();
  f.with_metric([eig, lam](const Vec& x) -> Mat {
    Mat scale = Mat::Zero(2, 2);
    scale(0, 0) = std::pow(lam, x[2]);
    scale(1, 1) = std::pow(lam, -x[2]);
    Mat l = Mat::Identity(3, 3);
    l.topLeftCorner(2, 2) = eig * scale * eig.transpose();
    return l;
  });
  return f;
}

inline System builtin(const std::string& name) {
  if (name == "zero3") return detail::make_system(zero_field(3));
  if (name == "constant3") return detail::make_system(constant_field((Vec(3) << 1.0, 0.5, 0.25).finished()));
  if (name == "abc") return detail::make_system(abc_field());
  if (name == "cat_suspension3") {
    System s = detail::make_system(cat_suspension_field());
    s.entropy_resolution = {16, 16, 1};
    return s;
  }
  if (name == "harmonic4") {
    HamiltonianSystem h(harmonic4_spec());
    return detail::make_system(h.field(), h);
  }
  if (name == "coupled_quartic4") {
    HamiltonianSystem h(coupled_quartic4_spec());
    return detail::make_system(h.field(), h);
  }
  fail(ErrorCode::UnknownSystem, "no built-in system named '" + name + "'");
}

namespace detail {

inline Polynomial polynomial_from_json(int dim, const nlohmann::json& terms) {
  require(terms.is_array(), "polynomial terms must be a list of [exponents, coefficient] pairs");
  Polynomial p(dim);
  for (const auto& t : terms) {
    require(t.is_array() && t.size() == 2 && t[0].is_array() && t[1].is_number(),
            "each polynomial term must be [exponent-tuple, coefficient]");
    require(static_cast<int>(t[0].size()) == dim, "exponent tuple length must equal dim");
    Polynomial::Exponents e{};
    for (int i = 0; i < dim; ++i) e[static_cast<std::size_t>(i)] = t[0][static_cast<std::size_t>(i)].get<int>();
    p.add(e, t[1].get<double>());
  }
  return p;
}

inline Domain domain_from_json(int dim, const nlohmann::json& j, const Domain& fallback) {
  if (j.is_null()) return fallback;
  Domain d = fallback;
  if (j.contains("lower")) {
    const auto v = j.at("lower").get<std::vector<double>>();
    require(static_cast<int>(v.size()) == dim, "domain.lower must have dim entries");
    for (int i = 0; i < dim; ++i) d.lower[i] = v[static_cast<std::size_t>(i)];
  }
  if (j.contains("upper")) {
    const auto v = j.at("upper").get<std::vector<double>>();
    require(static_cast<int>(v.size()) == dim, "domain.upper must have dim entries");
    for (int i = 0; i < dim; ++i) d.upper[i] = v[static_cast<std::size_t>(i)];
  }
  if (j.contains("periodic")) {
    const auto v = j.at("periodic").get<std::vector<bool>>();
    require(static_cast<int>(v.size()) == dim, "domain.periodic must have dim entries");
    d.periodic = v;
  }
  for (int i = 0; i < dim; ++i) require(d.upper[i] > d.lower[i], "domain bounds must satisfy lower < upper");
  return d;
}

}  // namespace detail

/// Vector field whose components are polynomials. Divergence-freeness is
/// decided symbolically; declaring it for a field that is not raises.
inline VectorField polynomial_field(std::string name, const std::vector<Polynomial>& components, Domain domain,
                                    std::optional<bool> declared_divergence_free = std::nullopt) {
  const int dim = static_cast<int>(components.size());
  if (dim != 3 && dim != 4) fail(ErrorCode::DimensionMismatch, "polynomial fields must have 3 or 4 components");
  if (domain.dim() != dim) fail(ErrorCode::DimensionMismatch, "domain dimension differs from field dimension");
  auto comps = std::make_shared<const std::vector<Polynomial>>(components);
  auto partials = std::make_shared<std::vector<Polynomial>>();
  Polynomial div(dim);
  for (int i = 0; i < dim; ++i) {
    for (int k = 0; k < dim; ++k) partials->push_back((*comps)[static_cast<std::size_t>(i)].derivative(k));
    div = div + (*partials)[static_cast<std::size_t>(i * dim + i)];
  }
  const bool div_free = div.is_zero();
  if (declared_divergence_free && *declared_divergence_free && !div_free) {
    fail(ErrorCode::InvalidArgument, "field '" + name + "' is declared divergence-free but its divergence is nonzero");
  }
  return VectorField(
      std::move(name), std::move(domain),
      [comps, dim](const Vec& x) -> Vec {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = (*comps)[static_cast<std::size_t>(i)](x);
        return v;
      },
      [partials, dim](const Vec& x) -> Mat {
        Mat j(dim, dim);
        for (int i = 0; i < dim; ++i) {
          for (int k = 0; k < dim; ++k) j(i, k) = (*partials)[static_cast<std::size_t>(i * dim + k)](x);
        }
        return j;
      },
      div_free);
}

/// Loads a system definition:
///   {"name", "dim", "kind": "builtin" | "polynomial" | "hamiltonian", "coefficients": ...}
/// For "polynomial", coefficients holds one term list per component; for
/// "hamiltonian", a single term list for H on R^4.
inline System system_from_json(const nlohmann::json& j) {
  require(j.is_object(), "system definition must be a JSON object");
  const std::string kind = j.value("kind", std::string("builtin"));
  const std::string name = j.value("name", std::string());
  if (kind == "builtin") {
    const std::string which = j.value("builtin", name);
    if (which == "abc" && j.contains("params")) {
      const auto& p = j.at("params");
      return detail::make_system(abc_field(p.value("A", 1.0), p.value("B", 1.0), p.value("C", 1.0)));
    }
    return builtin(which);
  }
  require(j.contains("dim"), "system definition needs 'dim'");
  const int dim = j.at("dim").get<int>();
  require(j.contains("coefficients"), "system definition needs 'coefficients'");
  const auto& coef = j.at("coefficients");
  if (kind == "polynomial") {
    if (dim != 3 && dim != 4) fail(ErrorCode::DimensionMismatch, "polynomial fields must have dim 3 or 4");
    require(coef.is_array() && static_cast<int>(coef.size()) == dim, "need one term list per component");
    std::vector<Polynomial> comps;
    for (const auto& c : coef) comps.push_back(detail::polynomial_from_json(dim, c));
    const Domain fallback = Domain::box(Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0));
    const Domain dom = detail::domain_from_json(dim, j.value("domain", nlohmann::json()), fallback);
    std::optional<bool> declared;
    if (j.contains("divergence_free")) declared = j.at("divergence_free").get<bool>();
    return detail::make_system(polynomial_field(name.empty() ? "polynomial" : name, comps, dom, declared));
  }
  if (kind == "hamiltonian") {
    if (dim != 4) fail(ErrorCode::DimensionMismatch, "Hamiltonian systems require dim 4");
    const Polynomial h = detail::polynomial_from_json(dim, coef);
    HamiltonianSystem sys(polynomial_hamiltonian_spec(name.empty() ? "hamiltonian" : name, h,
                                                      j.value("box_half_width", 12.0), j.value("support_energy", 2.0)));
    return detail::make_system(sys.field(), sys);
  }
  fail(ErrorCode::InvalidArgument, "unknown system kind '" + kind + "'");
}

/// Resolves a --system argument: a built-in name or a path to a JSON file.
inline System load_system(const std::string& name_or_path) {
  for (const auto& n : builtin_names()) {
    if (n == name_or_path) return builtin(n);
  }
  std::ifstream in(name_or_path);
  if (!in) fail(ErrorCode::UnknownSystem, "'" + name_or_path + "' is neither a built-in nor a readable file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("system file is not valid JSON: ") + e.what());
  }
  return system_from_json(j);
}

}  // namespace pesin_lab
