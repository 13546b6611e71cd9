#include "doctest.h"
#include "oracles.hpp"

#include "hommax/material.hpp"

using namespace hommax;

namespace {

PeriodicField random_field(std::mt19937_64& rng, const GridShape& s, int comps) {
  std::normal_distribution<double> g;
  PeriodicField f(s, comps);
  for (Eigen::Index i = 0; i < f.coeffs().size(); ++i) f.coeffs()(i) = cplx(g(rng), g(rng));
  return f;
}

}  // namespace

TEST_CASE("FFT matches a direct DFT and round-trips") {
  const GridShape s(4, 1, 6);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<cplx> v(s.size());
  for (auto& x : v) x = cplx(g(rng), g(rng));
  std::vector<cplx> hat = v;
  fft_forward(s, hat);
  for (std::size_t m = 0; m < s.size(); ++m) {
    const auto k = s.wavenumbers(m);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const Vec3 y = s.point(j);
      acc += v[j] * std::polar(1.0, -2 * M_PI * (k[0] * y(0) + k[1] * y(1) + k[2] * y(2)));
    }
    CHECK(std::abs(hat[m] - acc / static_cast<double>(s.size())) < 1e-12);
  }
  fft_backward(s, hat);
  for (std::size_t j = 0; j < s.size(); ++j) CHECK(std::abs(hat[j] - v[j]) < 1e-12);
}

TEST_CASE("lattice wavenumbers and indices") {
  const GridShape s(8, 1, 4);
  CHECK(GridShape::wavenumber(5, 8) == -3);
  CHECK(GridShape::wavenumber(4, 8) == -4);
  CHECK(s.contains_wavenumber({-4, 0, 1}));
  CHECK_FALSE(s.contains_wavenumber({4, 0, 0}));
  CHECK_FALSE(s.contains_wavenumber({0, 1, 0}));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.index_of_wavenumber(s.wavenumbers(i)) == i);
  CHECK_THROWS_AS(PeriodicField(GridShape(3, 1, 1), 3), InputError);
}

TEST_CASE("shifted differential operators") {
  std::mt19937_64 rng(3);
  const GridShape s(4, 4, 2);
  const Vec3 xi(0.4, -0.2, 1.0);
  const PeriodicField phi = random_field(rng, s, 1);
  const PeriodicField a = random_field(rng, s, 3);
  CHECK(shifted_curl(shifted_gradient(phi, xi), xi).coeffs().norm() < 1e-12);
  CHECK(shifted_divergence(shifted_curl(a, xi), xi).coeffs().norm() < 1e-12);
  // a plane wave e1 exp(2 pi i y2): curl = i 2pi e2 x e1 = -2 pi i e3
  PeriodicField w(s, 3);
  w.at(0, s.index_of_wavenumber({0, 1, 0})) = 1.0;
  const PeriodicField c = shifted_curl(w, Vec3::Zero());
  CHECK(std::abs(c.at(2, s.index_of_wavenumber({0, 1, 0})) + kI * 2.0 * M_PI) < 1e-14);
  CHECK(std::abs(c.at(0, s.index_of_wavenumber({0, 1, 0}))) == 0.0);
}

TEST_CASE("samples, TrigPoly conversion and realness") {
  std::mt19937_64 rng(4);
  const GridShape s(4, 2, 1);
  const PeriodicField f = random_field(rng, s, 3);
  const TrigPoly t = f.to_trig();
  const GridShape fine(8, 4, 2);
  const auto vals = f.sample(1, fine);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const Vec3 y = fine.point(i);
    CHECK(std::abs(vals[i] - t.evaluate(std::vector<double>{y(0), y(1), y(2)})[1]) < 1e-11);
  }
  const PeriodicField back = PeriodicField::from_trig(t, s);
  CHECK((back - f).coeffs().norm() < 1e-13);

  std::vector<std::vector<cplx>> real_vals(1, std::vector<cplx>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) real_vals[0][i] = std::cos(2 * M_PI * s.point(i)(0)) + 0.5;
  CHECK(PeriodicField::from_samples(s, real_vals).is_real(1e-14));
  CHECK_FALSE(f.is_real(1e-3));
}

TEST_CASE("material presets and the Hermiticity/ellipticity gate") {
  const MaterialTensor lam = MaterialTensor::laminate();
  CHECK(lam.alpha() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lam.is_real());
  CHECK(lam.varies()[0]);
  CHECK_FALSE(lam.varies()[1]);

  const auto broken = nlohmann::json::parse(
      R"({"fourier":[{"k":[0,0,0],"re":[[2,1,0],[0,2,0],[0,0,2]]}]})");
  CHECK_THROWS_AS(MaterialTensor::from_json(broken), MaterialError);
  const auto indefinite = nlohmann::json::parse(R"({"preset":"laminate","a":1,"b":2})");
  CHECK_THROWS_AS(MaterialTensor::from_json(indefinite), MaterialError);
  CHECK_THROWS_AS(MaterialTensor::from_json(nlohmann::json::parse(R"({"preset":"glass"})")), InputError);

  const auto complex_herm = nlohmann::json::parse(
      R"({"fourier":[{"k":[0,0,0],"re":[[2,0,0],[0,2,0],[0,0,2]],"im":[[0,0.5,0],[-0.5,0,0],[0,0,0]]}]})");
  const MaterialTensor ch = MaterialTensor::from_json(complex_herm);
  CHECK_FALSE(ch.is_real());
  CHECK(ch.alpha() == doctest::Approx(1.5).epsilon(1e-12));

  CHECK_THROWS_AS(GalerkinTensor(lam, GridShape(1, 4, 4)), InputError);
}

TEST_CASE("Galerkin product equals truncated exact convolution") {
  const MaterialTensor mat = MaterialTensor::separable_trig(3.0, Vec3(1.0, 0.5, 0.0));
  const GridShape s(4, 4, 1);
  const GalerkinTensor G(mat, s);
  std::mt19937_64 rng(8);
  const PeriodicField v = random_field(rng, s, 3);

  // oracle: exact TrigPoly product, then keep lattice wavenumbers
  const auto a = mat.as_trig(GridShape(8, 8, 1));
  const TrigPoly prod = apply_tensor(a, v.to_trig());
  PeriodicField expect(s, 3);
  for (const auto& [key, c] : prod.terms()) {
    const auto f = prod.frequency(key);
    const std::array<int, 3> k{static_cast<int>(std::lround(f[0] / (2 * M_PI))),
                               static_cast<int>(std::lround(f[1] / (2 * M_PI))),
                               static_cast<int>(std::lround(f[2] / (2 * M_PI)))};
    if (!s.contains_wavenumber(k)) continue;
    for (int comp = 0; comp < 3; ++comp) expect.at(comp, s.index_of_wavenumber(k)) = c[comp];
  }
  CHECK((G.apply(v) - expect).coeffs().norm() < 1e-12);
  const MatrixXc D = G.dense();
  CHECK((D * v.coeffs() - expect.coeffs()).norm() < 1e-12);
  CHECK((D - D.adjoint()).norm() < 1e-13);
}
