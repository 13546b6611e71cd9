#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's FFT or solver code paths.

#include "hommax/trigap.hpp"

#include <cmath>
#include <random>

namespace oracle {

using hommax::cplx;

// Composite trapezoid rule on a periodic integrand over [0, 1); spectrally accurate.
template <class F>
double periodic_mean(F&& f, int points = 4096) {
  double s = 0.0;
  for (int i = 0; i < points; ++i) s += f(static_cast<double>(i) / points);
  return s / points;
}

// Harmonic mean of a positive periodic function.
template <class F>
double harmonic_mean(F&& q, int points = 4096) {
  return 1.0 / periodic_mean([&](double y) { return 1.0 / q(y); }, points);
}

// Random polynomial with quasimomentum classes drawn from `classes` and lattice
// offsets in [-2, 2]^d. Coefficients are Gaussian.
inline hommax::TrigPoly random_poly(std::mt19937_64& rng, int dim, hommax::ValueRank rank,
                                    const std::vector<std::vector<double>>& classes, int terms) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> off(-2, 2);
  std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);
  hommax::TrigPoly p(dim, rank);
  const int sd = dim == 4 ? 3 : dim;
  const int s0 = dim == 4 ? 1 : 0;
  for (int t = 0; t < terms; ++t) {
    std::vector<double> f(dim, 0.0);
    if (dim == 4) f[0] = 0.5 * off(rng);
    const auto& c = classes[pick(rng)];
    for (int i = 0; i < sd; ++i) f[s0 + i] = c[i] + 2.0 * M_PI * off(rng);
    hommax::Coeff coeff{cplx(g(rng), g(rng)), cplx(g(rng), g(rng)), cplx(g(rng), g(rng))};
    if (rank == hommax::ValueRank::scalar) coeff[1] = coeff[2] = 0.0;
    p.add_term(f, coeff);
  }
  return p;
}

// Direct evaluation of a product at a point, independent of the convolution.
inline hommax::Coeff eval(const hommax::TrigPoly& p, const std::vector<double>& z) {
  return p.evaluate(z);
}

}  // namespace oracle
