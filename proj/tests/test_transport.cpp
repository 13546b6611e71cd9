#include "doctest.h"

#include "hommax/cell.hpp"
#include "hommax/transport.hpp"

#include <random>

using namespace hommax;

namespace {

struct Setup {
  GridShape s;
  GalerkinTensor P, Q;
  BlochProblem prob;
  Setup(GridShape shape, const MaterialTensor& p, const MaterialTensor& q)
      : s(shape), P(p, shape), Q(q, shape), prob(P, Q) {}
};

Setup laminate_setup() {
  return Setup(GridShape(8, 2, 2), MaterialTensor::identity(), MaterialTensor::laminate());
}

// Band index of the smallest positive simple eigenvalue at xi.
int first_simple_positive(const BlochSlice& slice) {
  for (std::size_t g = 0; g < slice.groups.size(); ++g) {
    if (slice.groups[g].lambda > 0.1 && slice.groups[g].multiplicity == 1) return static_cast<int>(g);
  }
  throw std::runtime_error("no simple positive band");
}

double nearest_eigenvalue(const BlochSlice& slice, double lambda) {
  double best = slice.eigenvalues.front();
  for (double l : slice.eigenvalues) {
    if (std::abs(l - lambda) < std::abs(best - lambda)) best = l;
  }
  return best;
}

TrigPoly macro_wave(const Wavevector& k, cplx c = 1.0) {
  const std::vector<double> f{kTwoPi * k[0], kTwoPi * k[1], kTwoPi * k[2]};
  return TrigPoly::monomial(3, f, c);
}

TrigPoly modulated(const PeriodicField& f, const Vec3& xi) {
  const std::vector<double> shift{xi(0), xi(1), xi(2)};
  return f.to_trig().shifted(shift);
}

// exp(i s nu) * micro(y) as a polynomial in (s, y).
TrigPoly with_time_frequency(const TrigPoly& micro, double nu) {
  TrigPoly out(4, ValueRank::vector3);
  for (const auto& [key, c] : micro.terms()) {
    const auto f = micro.frequency(key);
    out.add_term(std::vector<double>{nu, f[0], f[1], f[2]}, c);
  }
  return out;
}

BCoefficients random_skew(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> g;
  BCoefficients b(m, std::vector<Vec3c>(m));
  for (auto& row : b)
    for (auto& v : row) v = Vec3c(cplx(g(rng), g(rng)), cplx(g(rng), g(rng)), cplx(g(rng), g(rng)));
  BCoefficients s = b;
  for (int l = 0; l < m; ++l)
    for (int q = 0; q < m; ++q) s[l][q] = 0.5 * (b[l][q] - b[q][l].conjugate());
  return s;
}

}  // namespace

TEST_CASE("simple band: skew coefficients and group velocity from the dispersion gradient") {
  const Setup lam = laminate_setup();
  const Vec3 xi(0.7, 0.4, -0.3);
  const BlochSlice slice = bloch_eigensolve(lam.prob, xi);
  const BandGroup& band = slice.groups[first_simple_positive(slice)];
  const auto modes = slice.modes_of(first_simple_positive(slice));
  REQUIRE(modes.size() == 1);
  const BCoefficients b = transport_coefficients(modes);
  CHECK(skew_defect(b) <= 1e-12);

  const double h = 1e-4;
  const Vec3c velocity = kI * b[0][0];
  for (int c = 0; c < 3; ++c) {
    Vec3 dx = Vec3::Zero();
    dx(c) = h;
    const double lp = nearest_eigenvalue(bloch_eigensolve(lam.prob, xi + dx), band.lambda);
    const double lm = nearest_eigenvalue(bloch_eigensolve(lam.prob, xi - dx), band.lambda);
    const double grad = (lp - lm) / (2 * h);
    CHECK(std::abs(velocity(c).imag()) < 1e-12);
    CHECK(std::abs(velocity(c).real() + grad) < 1e-6);
  }
}

TEST_CASE("vacuum kernel: coefficients couple B and E through the cross product") {
  const Setup vac(GridShape(4, 4, 4), MaterialTensor::identity(), MaterialTensor::identity());
  const auto modes = kernel_basis(vac.P, vac.Q, homogenized_tensor(vac.P), homogenized_tensor(vac.Q));
  const BCoefficients b = transport_coefficients(modes);
  for (int l = 0; l < 3; ++l) {
    for (int q = 0; q < 3; ++q) {
      CHECK(b[l][q].norm() < 1e-14);
      CHECK(b[3 + l][3 + q].norm() < 1e-14);
      Vec3c el = Vec3c::Zero(), eq = Vec3c::Zero();
      el(l) = 1.0;
      eq(q) = 1.0;
      CHECK((b[l][3 + q] - kI * cross(el, eq)).norm() < 1e-12);
    }
  }
  CHECK(skew_defect(b) < 1e-14);
}

TEST_CASE("amplitude propagator is unitary and matches a Runge-Kutta Duhamel oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const BCoefficients b = random_skew(rng, 4);
  CHECK(skew_defect(b) < 1e-15);
  const MatrixXc gen = transport_generator(b, {1, -2, 1});
  CHECK((gen + gen.adjoint()).norm() < 1e-12);

  VectorXc a0(4), f(4);
  for (int i = 0; i < 4; ++i) {
    a0(i) = cplx(g(rng), g(rng));
    f(i) = cplx(g(rng), g(rng));
  }
  const VectorXc zero = VectorXc::Zero(4);
  for (double t : {0.0, 0.37, 1.0, 5.0}) {
    CHECK(std::abs(amplitude_at(gen, a0, zero, t).norm() - a0.norm()) <= 1e-12 * a0.norm());
  }

  const double dt = 1e-4;
  VectorXc a = a0;
  auto rhs = [&](const VectorXc& x) -> VectorXc { return gen * x + f; };
  for (int step = 0; step < 10000; ++step) {
    const VectorXc k1 = rhs(a), k2 = rhs(a + 0.5 * dt * k1), k3 = rhs(a + 0.5 * dt * k2),
                   k4 = rhs(a + dt * k3);
    a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  CHECK((amplitude_at(gen, a0, f, 1.0) - a).norm() < 1e-8);

  const BCoefficients zero_b(2, std::vector<Vec3c>(2, Vec3c::Zero()));
  const VectorXc f2 = VectorXc::Constant(2, cplx(0.5, -1.0));
  const VectorXc at = amplitude_at(transport_generator(zero_b, {1, 0, 0}), VectorXc::Zero(2), f2, 2.0);
  CHECK((at - 2.0 * f2).norm() < 1e-14);
}

TEST_CASE("initial data projection: self, well-prepared and foreign quasimomentum") {
  const Setup lam = laminate_setup();
  const Vec3 xi(0.7, 0.4, -0.3);
  const BlochSlice slice = bloch_eigensolve(lam.prob, xi);
  const BandGroup& band = slice.groups[first_simple_positive(slice)];
  const auto modes = slice.modes_of(first_simple_positive(slice));
  const BlochMode& m = modes.front();

  const TwoScaleField B0{{macro_wave({1, 0, 0}, 2.0), modulated(m.Phi, xi)}};
  const TwoScaleField E0{{macro_wave({1, 0, 0}, 2.0), modulated(m.Psi, xi)}};
  CHECK_NOTHROW(validate_two_scale_divergence(B0, E0, lam.P));
  const AmplitudeMap alpha = project_initial_data(B0, E0, modes, lam.P);
  REQUIRE(alpha.size() == 1);
  CHECK(std::abs(alpha.at({1, 0, 0})(0) - 2.0) < 1e-10);
  CHECK(std::abs(data_energy(B0, E0, xi, lam.prob) - 4.0) < 1e-10);

  const BlochSlice other = bloch_eigensolve(lam.prob, Vec3(-0.2, 0.1, 0.5));
  const auto other_modes = other.modes_of(first_simple_positive(other));
  const AmplitudeMap none = project_initial_data(B0, E0, other_modes, lam.P);
  for (const auto& [k, v] : none) CHECK(v.norm() == 0.0);

  // Kernel data at xi = 0 has no share in the oscillating eigenspaces.
  const auto kernel = kernel_basis(lam.P, lam.Q, homogenized_tensor(lam.P), homogenized_tensor(lam.Q));
  TwoScaleField Bk, Ek;
  for (int i = 0; i < 6; ++i) {
    Bk.push_back({macro_wave({0, 1, 0}, cplx(1.0 + i, -0.5 * i)), kernel[i].Phi.to_trig()});
    Ek.push_back({macro_wave({0, 1, 0}, cplx(0.3 * i, 1.0)), kernel[i].Psi.to_trig()});
  }
  CHECK_NOTHROW(validate_two_scale_divergence(Bk, Ek, lam.P));
  const BlochSlice zero = bloch_eigensolve(lam.prob, Vec3::Zero(), ModeSelection::up_to(15.0));
  int checked = 0;
  for (std::size_t g = 0; g < zero.groups.size(); ++g) {
    const double lambda = zero.groups[g].lambda;
    if (std::abs(lambda) < 1e-6 || std::abs(lambda) > 15.0) continue;
    const AmplitudeMap a = project_initial_data(Bk, Ek, zero.modes_of(static_cast<int>(g)), lam.P);
    for (const auto& [k, v] : a) CHECK(v.norm() <= 1e-8);
    ++checked;
  }
  CHECK(checked > 0);

  const TwoScaleField bad{{macro_wave({0, 0, 0}), TrigPoly::monomial(3, std::vector<double>{kTwoPi, 0, 0},
                                                                     Vec3c(1.0, 0.0, 0.0))}};
  CHECK_THROWS_AS(validate_two_scale_divergence(bad, {}, lam.P), InputError);
}

TEST_CASE("forcing projection keeps only the resonant time frequency") {
  const Setup lam = laminate_setup();
  const Vec3 xi(0.7, 0.4, -0.3);
  const BlochSlice slice = bloch_eigensolve(lam.prob, xi);
  const BandGroup& band = slice.groups[first_simple_positive(slice)];
  const auto modes = slice.modes_of(first_simple_positive(slice));
  const BlochMode& m = modes.front();

  CHECK(project_forcing({}, {}, modes).empty());

  const ForcingField f{{macro_wave({0, 0, 1}), with_time_frequency(modulated(m.Phi, xi), m.lambda)}};
  const AmplitudeMap fa = project_forcing(f, {}, modes);
  CHECK(std::abs(fa.at({0, 0, 1})(0) - cell_inner(m.Phi, m.QinvPhi)) < 1e-12);

  const ForcingField g{{macro_wave({0, 0, 1}), with_time_frequency(modulated(m.Psi, xi), m.lambda)}};
  const AmplitudeMap ga = project_forcing({}, g, modes);
  CHECK(std::abs(ga.at({0, 0, 1})(0) - cell_inner(m.Psi, m.Psi)) < 1e-12);

  const ForcingField off{{macro_wave({0, 0, 1}), with_time_frequency(modulated(m.Phi, xi), m.lambda + 1.0)}};
  for (const auto& [k, v] : project_forcing(off, {}, modes)) CHECK(v.norm() == 0.0);

  TrigPoly timed(4, ValueRank::scalar);
  timed.add_term(std::vector<double>{1.0, 0.0, 0.0, 0.0}, cplx(1.0));
  const ForcingField bad{{timed, with_time_frequency(modulated(m.Phi, xi), m.lambda)}};
  CHECK_THROWS_AS(project_forcing(bad, {}, modes), InputError);
  CHECK_THROWS_AS(macro_coefficients(TrigPoly::monomial(3, std::vector<double>{1.0, 0, 0}, cplx(1.0))),
                  InputError);
}

TEST_CASE("amplitude system: simple band advects the envelope") {
  const Setup lam = laminate_setup();
  const Vec3 xi(0.7, 0.4, -0.3);
  const BlochSlice slice = bloch_eigensolve(lam.prob, xi);
  const auto modes = slice.modes_of(first_simple_positive(slice));
  const TwoScaleField B0{{macro_wave({1, 0, 0}) + macro_wave({0, 2, 0}, 0.5), modulated(modes[0].Phi, xi)}};
  const TwoScaleField E0{{macro_wave({1, 0, 0}) + macro_wave({0, 2, 0}, 0.5), modulated(modes[0].Psi, xi)}};
  const AmplitudeSystem sys = build_amplitude_system(modes, B0, E0, {}, {}, lam.P);
  const auto sol = solve_amplitude_system(sys, uniform_nodes(1.0, 11));
  REQUIRE(sol.values.size() == 2);
  const Vec3c v = kI * sys.b[0][0];
  for (const auto& [k, series] : sol.values) {
    const double kv = kTwoPi * (k[0] * v(0).real() + k[1] * v(1).real() + k[2] * v(2).real());
    for (std::size_t n = 0; n < sol.times.size(); ++n) {
      const cplx expected = sys.a0.at(k)(0) * std::exp(-kI * kv * sol.times[n]);
      CHECK(std::abs(series[n](0) - expected) < 1e-12);
    }
  }
  CHECK_THROWS_AS(uniform_nodes(1.0, 1), InputError);
}
