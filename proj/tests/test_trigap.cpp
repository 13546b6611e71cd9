#include "doctest.h"
#include "oracles.hpp"

#include "hommax/trigap.hpp"

#include <cmath>

using namespace hommax;

namespace {

std::vector<double> f3(double a, double b, double c) { return {a, b, c}; }

TrigPoly mono(std::vector<double> f, cplx c) {
  return TrigPoly::monomial(static_cast<int>(f.size()), f, c);
}

cplx coef(const TrigPoly& p, std::vector<double> f) { return p.coefficient(f)[0]; }

const std::vector<std::vector<double>> kClasses{{0.0, 0.0, 0.0}, {0.3, -1.1, 2.0}, {-M_PI, 0.5, 0.0}};

}  // namespace

TEST_CASE("product of conjugate exponentials is the constant 1") {
  const TrigPoly p = trig_product(mono(f3(1, 0, 0), 1.0), mono(f3(-1, 0, 0), 1.0));
  CHECK(p.size() == 1);
  CHECK(std::abs(coef(p, f3(0, 0, 0)) - 1.0) < 1e-15);
}

TEST_CASE("single-term convolution multiplies coefficients and adds frequencies") {
  const TrigPoly p = trig_product(mono(f3(1, 0, 0), 2.0), mono(f3(0, 1, 0), 3.0));
  CHECK(p.size() == 1);
  CHECK(std::abs(coef(p, f3(1, 1, 0)) - 6.0) < 1e-15);
}

TEST_CASE("square of 2 cos y1 agrees with a brute-force convolution oracle") {
  const TrigPoly u = mono(f3(1, 0, 0), 1.0) + mono(f3(-1, 0, 0), 1.0);
  const TrigPoly p = trig_product(u, u);
  CHECK(p.size() == 3);
  CHECK(std::abs(coef(p, f3(2, 0, 0)) - 1.0) < 1e-15);
  CHECK(std::abs(coef(p, f3(0, 0, 0)) - 2.0) < 1e-15);
  CHECK(std::abs(coef(p, f3(-2, 0, 0)) - 1.0) < 1e-15);

  std::mt19937_64 rng(7);
  const TrigPoly a = oracle::random_poly(rng, 3, ValueRank::scalar, kClasses, 6);
  const TrigPoly b = oracle::random_poly(rng, 3, ValueRank::vector3, kClasses, 6);
  const TrigPoly ab = trig_product(a, b);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> z{unif(rng), unif(rng), unif(rng)};
    const Coeff lhs = ab.evaluate(z);
    const Coeff ea = a.evaluate(z), eb = b.evaluate(z);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(lhs[c] - ea[0] * eb[c]) < 1e-11);
  }
}

TEST_CASE("dot and cross contractions match pointwise evaluation") {
  std::mt19937_64 rng(11);
  const TrigPoly a = oracle::random_poly(rng, 3, ValueRank::vector3, kClasses, 4);
  const TrigPoly b = oracle::random_poly(rng, 3, ValueRank::vector3, kClasses, 4);
  const TrigPoly d = trig_product(a, b, Contraction::dot);
  const TrigPoly x = trig_product(a, b, Contraction::cross);
  const std::vector<double> z{0.2, -0.7, 1.3};
  const Coeff ea = a.evaluate(z), eb = b.evaluate(z);
  const Vec3c va(ea[0], ea[1], ea[2]), vb(eb[0], eb[1], eb[2]);
  CHECK(std::abs(d.evaluate(z)[0] - (va.transpose() * vb).value()) < 1e-11);
  const Vec3c cr = cross(va, vb);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(x.evaluate(z)[c] - cr(c)) < 1e-11);
}

TEST_CASE("products reject mismatched dimensions and uncontracted vector pairs") {
  CHECK_THROWS_AS(trig_product(TrigPoly::constant(3, 1.0), TrigPoly::constant(4, 1.0)), InputError);
  const TrigPoly v = TrigPoly::constant(3, Vec3c(1, 0, 0));
  CHECK_THROWS_AS(trig_product(v, v), InputError);
}

TEST_CASE("mean values") {
  const TrigPoly osc = mono(f3(0.4, 1.0, 0.0), 1.0);
  CHECK(std::abs(mean(osc)[0]) == 0.0);
  CHECK(std::abs(mean(TrigPoly::constant(3, 3.0) + mono(f3(1, 0, 0), 1.0))[0] - 3.0) < 1e-15);

  const TrigPoly u = mono({2, 1, 0, 0}, 1.0) + mono({0, 0, 1, 0}, 5.0);
  const std::array<int, 1> s_axis{0};
  const TrigPoly ms = mean_value(u, s_axis);
  CHECK(ms.size() == 1);
  CHECK(std::abs(coef(ms, {0, 0, 1, 0}) - 5.0) < 1e-15);
  const std::array<int, 3> y_axes{1, 2, 3};
  CHECK(mean_value(u, y_axes).is_zero());
}

TEST_CASE("partial derivatives") {
  const TrigPoly d = partial_derivative(mono(f3(1, 0, 0), 1.0), 0);
  CHECK(std::abs(coef(d, f3(1, 0, 0)) - kI) < 1e-15);
  CHECK(partial_derivative(TrigPoly::constant(3, 4.0), 1).is_zero());
  const TrigPoly u = mono(f3(1, 1, 0), 1.0) + mono(f3(2, 0, 0), 1.0);
  const TrigPoly du = partial_derivative(u, 0);
  CHECK(std::abs(coef(du, f3(1, 1, 0)) - kI) < 1e-15);
  CHECK(std::abs(coef(du, f3(2, 0, 0)) - 2.0 * kI) < 1e-15);
}

TEST_CASE("Gelfand transform examples") {
  const TrigPoly u0 = TrigPoly::constant(3, 3.0) + mono(f3(2 * M_PI, 0, 0), 1.0);
  const std::vector<double> zero{0, 0, 0};
  CHECK(approx_equal(gelfand_transform(u0, zero), u0, 1e-15));

  const std::vector<double> xi{0.3, -1.2, 2.5};
  const TrigPoly single = mono(f3(0.3 + 2 * M_PI, -1.2 - 4 * M_PI, 2.5), 1.0);
  CHECK(approx_equal(gelfand_transform(single, xi), mono(f3(2 * M_PI, -4 * M_PI, 0), 1.0), 1e-15));

  const TrigPoly mixed = mono(f3(0.3, 0, 0), 1.0) + mono(f3(0.3 + 2 * M_PI, 0, 0), 1.0) +
                         mono(f3(0, 1, 0), 1.0);
  const std::vector<double> xi1{0.3, 0, 0};
  const TrigPoly expect = TrigPoly::constant(3, 1.0) + mono(f3(2 * M_PI, 0, 0), 1.0);
  CHECK(approx_equal(gelfand_transform(mixed, xi1), expect, 1e-15));

  const std::vector<double> outside{M_PI, 0, 0};
  CHECK_THROWS_AS(gelfand_transform(mixed, outside), InputError);
}

TEST_CASE("Besicovitch inner products") {
  CHECK(std::abs(besicovitch_inner(mono(f3(1, 0, 0), 1.0), mono(f3(0, 1, 0), 1.0), 0)) == 0.0);
  CHECK(std::abs(besicovitch_inner(mono(f3(1, 0, 0), 2.0), mono(f3(1, 0, 0), 2.0), 0) - 4.0) < 1e-14);
  CHECK(std::abs(besicovitch_inner(mono(f3(1, 0, 0), 1.0), mono(f3(1, 0, 0), 1.0), 1) - 4.0) < 1e-14);
  const TrigPoly c = TrigPoly::constant(3, 1.0) + mono(f3(2, 0, 0), 1.0);
  CHECK(std::abs(besicovitch_inner(c, c, -1) - 0.25) < 1e-14);
  CHECK_THROWS_AS(besicovitch_inner(c, TrigPoly::constant(3, Vec3c(1, 0, 0)), 0), InputError);
}

TEST_CASE("Gelfand identities on random polynomials") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const TrigPoly u = oracle::random_poly(rng, 3, ValueRank::vector3, kClasses, 8);
    const TrigPoly v = oracle::random_poly(rng, 3, ValueRank::scalar, {{0.0, 0.0, 0.0}}, 5);
    const auto classes = quasimomenta(u);
    TrigPoly rebuilt(3, ValueRank::vector3);
    for (const auto& xi : classes) {
      CHECK(approx_equal(gelfand_transform(trig_product(v, u), xi),
                         trig_product(v, gelfand_transform(u, xi)), 1e-12));
      for (int j = 0; j < 3; ++j) {
        const TrigPoly lhs = gelfand_transform(partial_derivative(u, j), xi);
        const TrigPoly tu = gelfand_transform(u, xi);
        const TrigPoly rhs = tu * (kI * xi[j]) + partial_derivative(tu, j);
        CHECK(approx_equal(lhs, rhs, 1e-11));
      }
      rebuilt = rebuilt + gelfand_transform(u, xi).shifted(xi);
    }
    CHECK(approx_equal(rebuilt, u, 1e-13));
  }
}

TEST_CASE("Parseval and the Leibniz rule") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const TrigPoly u = oracle::random_poly(rng, 4, ValueRank::scalar, kClasses, 6);
    const TrigPoly v = oracle::random_poly(rng, 4, ValueRank::scalar, kClasses, 6);
    double sum = 0.0;
    for (const auto& [k, c] : u.terms()) sum += std::norm(c[0]);
    CHECK(std::abs(besicovitch_inner(u, u, 0) - sum) < 1e-12 * sum);
    CHECK(std::abs(mean(trig_product(u, u.conj()))[0] - sum) < 1e-12 * sum);
    for (int j = 0; j < 4; ++j) {
      const TrigPoly lhs = partial_derivative(trig_product(u, v), j);
      const TrigPoly rhs = trig_product(partial_derivative(u, j), v) + trig_product(u, partial_derivative(v, j));
      CHECK(approx_equal(lhs, rhs, 1e-10));
    }
  }
}

TEST_CASE("pruning and canonical keys") {
  TrigPoly p = mono(f3(1.0, 0, 0), 1.0);
  p.add_term(f3(1.0 + 4e-13, 0, 0), -1.0);
  CHECK(p.is_zero());
  TrigPoly q = mono(f3(1.0, 0, 0), 1e-15);
  CHECK(q.is_zero());
}

TEST_CASE("JSON round trip") {
  std::mt19937_64 rng(5);
  const TrigPoly u = oracle::random_poly(rng, 4, ValueRank::vector3, kClasses, 5);
  const TrigPoly back = TrigPoly::from_json(u.to_json(), 4);
  CHECK(approx_equal(u, back, 1e-14));
  CHECK_THROWS_AS(TrigPoly::from_json(nlohmann::json::parse(R"([{"frequency":[1,2],"re":[1]}])"), 3),
                  InputError);
}

TEST_CASE("dim-4 transform carries the time variable") {
  const TrigPoly u = mono({1.5, 0.3 + 2 * M_PI, 0, 0}, 2.0) + mono({0.0, 0.1, 0, 0}, 1.0);
  const std::vector<double> xi{0.3, 0, 0};
  const TrigPoly t = gelfand_transform(u, xi);
  CHECK(t.size() == 1);
  CHECK(std::abs(coef(t, {1.5, 2 * M_PI, 0, 0}) - 2.0) < 1e-15);
}
