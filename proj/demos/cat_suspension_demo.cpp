// Walks through the objects of the toolkit on the suspension of the cat map.
#include <cmath>
#include <cstdio>

#include "pesin_lab.hpp"

using namespace pesin_lab;

int main() {
  const VectorField field = builtin("cat_suspension3").field;
  const Vec x = (Vec(3) << 0.25, 0.125, 0.0).finished();
  const double log_lambda = std::log(kCatLambda);

  const auto end = flow(field, x, 1.0).position;
  std::printf("time-1 map: (%.4f, %.4f, %.4f) -> (%.4f, %.4f, %.4f)\n", x[0], x[1], x[2], end[0], end[1], end[2]);

  const PoincareCocycle p = linear_poincare(field, x, 1.0);
  std::printf("P^1 in normal frames:\n  [%8.5f %8.5f]\n  [%8.5f %8.5f]\n", p.matrix(0, 0), p.matrix(0, 1),
              p.matrix(1, 0), p.matrix(1, 1));

  const LyapunovSpectrum s = spectrum(field, x, 500.0);
  std::printf("spectrum at t=500: %.6f %.6f %.6f (log lambda = %.6f)\n", s.exponents[0], s.exponents[1],
              s.exponents[2], log_lambda);

  for (double ell : {1.0, 0.1}) {
    const DominationReport d = domination_check(field, x, ell, 10.0 * ell);
    std::printf("domination ell=%.1f: max product %.6f -> %s\n", ell, d.max_product, d.passed ? "dominated" : "not dominated");
  }

  for (double c : {1.0, 2.0}) {
    const SuspensionSystem sys = suspend(cat_base(), Ceiling::constant(c));
    EntropyOptions o;
    o.resolution = {16, 16, static_cast<int>(c)};
    o.n_orbits = 50;
    o.orbit_length = 4000;
    o.seed = 1;
    const EntropyEstimate e = flow_entropy(sys, o);
    std::printf("ceiling %.0f: entropy estimate %.4f (depth %d), Abramov prediction %.4f\n", c, e.value, e.n_depth,
                abramov_check(sys, log_lambda));
  }
  return 0;
}
