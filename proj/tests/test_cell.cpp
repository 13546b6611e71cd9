#include "doctest.h"
#include "oracles.hpp"

#include "hommax/cell.hpp"

using namespace hommax;

namespace {
double q_lam(double y) { return 2.0 + std::cos(2 * M_PI * y); }
}  // namespace

TEST_CASE("constant coefficients need no corrector") {
  const GalerkinTensor A(MaterialTensor::identity(2.5), GridShape(4, 4, 4));
  const CellCorrector c = solve_cell_corrector(A, Vec3c(1, 0, 0));
  CHECK(c.potential.coeffs().norm() == 0.0);
  const Homogenization h = homogenized_tensor(A);
  CHECK((h.tensor - 2.5 * Mat3c::Identity()).norm() < 1e-12);
}

TEST_CASE("laminate correctors match the one-dimensional closed form") {
  const GridShape s(16, 1, 1);
  const GalerkinTensor A(MaterialTensor::laminate(), s);
  CHECK(solve_cell_corrector(A, Vec3c(0, 1, 0)).potential.coeffs().norm() == 0.0);

  const CellCorrector c = solve_cell_corrector(GalerkinTensor(MaterialTensor::laminate(), GridShape(32, 1, 1)),
                                               Vec3c(1, 0, 0));
  CHECK(c.residual <= 1e-10);
  const double h = oracle::harmonic_mean(q_lam);
  CHECK(h == doctest::Approx(std::sqrt(3.0)).epsilon(1e-13));
  const PeriodicField grad = shifted_gradient(c.potential, Vec3::Zero());
  const GridShape fine(64, 1, 1);
  const auto d1 = grad.sample(0, fine);
  double err = 0.0;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const double y = fine.point(i)(0);
    err = std::max(err, std::abs(d1[i] - (h / q_lam(y) - 1.0)));
  }
  CHECK(err < 1e-7);  // truncation at |k| <= 16 leaves (2 - sqrt 3)^16 ~ 7e-10
}

TEST_CASE("laminate homogenized tensor is diag(harmonic, arithmetic, arithmetic)") {
  const GalerkinTensor A(MaterialTensor::laminate(), GridShape(16, 1, 1));
  const Homogenization h = homogenized_tensor(A);
  const double harm = oracle::harmonic_mean(q_lam);
  const double arith = oracle::periodic_mean(q_lam);
  Mat3c expect = Mat3c::Zero();
  expect.diagonal() << harm, arith, arith;
  CHECK((h.tensor - expect).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((h.tensor - h.energy_tensor).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(h.hermiticity_defect < 1e-10);
  CHECK(h.min_eigenvalue >= 1.0 - 1e-8);
}

TEST_CASE("energy form agrees with the flux form for a full 3-D tensor") {
  std::vector<std::pair<std::array<int, 3>, Mat3c>> terms;
  Mat3c c0;
  c0 << 3.0, 0.2, 0.1, 0.2, 2.5, 0.0, 0.1, 0.0, 2.0;
  Mat3c c1 = Mat3c::Zero();
  c1(0, 0) = 0.4;
  c1(0, 1) = cplx(0.1, 0.05);
  c1(1, 0) = cplx(0.1, 0.05);
  terms.push_back({{0, 0, 0}, c0});
  terms.push_back({{1, 0, 1}, c1});
  terms.push_back({{-1, 0, -1}, c1.conjugate()});
  Mat3c c2 = Mat3c::Zero();
  c2(2, 2) = 0.3;
  c2(1, 2) = 0.1;
  c2(2, 1) = 0.1;
  terms.push_back({{0, 1, 0}, c2});
  terms.push_back({{0, -1, 0}, c2.conjugate()});
  const GalerkinTensor A(MaterialTensor::fourier(terms), GridShape(8, 8, 8));
  const Homogenization h = homogenized_tensor(A);
  CHECK((h.tensor - h.energy_tensor).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(h.hermiticity_defect < 1e-10);
  CHECK(h.min_eigenvalue >= A.material().alpha() - 1e-8);
  for (const auto& c : h.correctors) {
    CHECK(c.residual <= 1e-10);
    CHECK(std::abs(c.potential.mean_scalar()) == 0.0);
  }
}

TEST_CASE("homogenized tensor converges spectrally under refinement") {
  const MaterialTensor mat = MaterialTensor::separable_trig(2.0, Vec3(0.9, 0.6, 0.0));
  const Mat3c h4 = homogenized_tensor(GalerkinTensor(mat, GridShape(4, 4, 1))).tensor;
  const Mat3c h8 = homogenized_tensor(GalerkinTensor(mat, GridShape(8, 8, 1))).tensor;
  const Mat3c h16 = homogenized_tensor(GalerkinTensor(mat, GridShape(16, 16, 1))).tensor;
  const double d1 = (h4 - h8).norm(), d2 = (h8 - h16).norm();
  CHECK(d2 * 10.0 <= d1);
}

TEST_CASE("kernel basis") {
  const GridShape s(4, 4, 4);
  {
    const GalerkinTensor P(MaterialTensor::identity(), s), Q(MaterialTensor::identity(), s);
    const auto modes = kernel_basis(P, Q, homogenized_tensor(P), homogenized_tensor(Q));
    REQUIRE(modes.size() == 6);
    for (int i = 0; i < 3; ++i) {
      CHECK((modes[i].Phi.mean_vector() - Vec3c::Unit(i)).norm() < 1e-14);
      CHECK(modes[i].Phi.coeffs().norm() == doctest::Approx(1.0));
      CHECK((modes[3 + i].Psi.mean_vector() - Vec3c::Unit(i)).norm() < 1e-14);
    }
  }
  const GridShape s1(16, 1, 1);
  const GalerkinTensor P(MaterialTensor::identity(), s1), Q(MaterialTensor::laminate(), s1);
  const auto modes = kernel_basis(P, Q, homogenized_tensor(P), homogenized_tensor(Q));
  // U-modes carry the laminate gradient only in the e1 slot
  const auto& hq = homogenized_tensor(Q);
  CHECK(hq.correctors[0].potential.coeffs().norm() > 1e-2);
  CHECK(hq.correctors[1].potential.coeffs().norm() == 0.0);
  CHECK(hq.correctors[2].potential.coeffs().norm() == 0.0);
  MatrixXc gram(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) gram(i, j) = weighted_inner(modes[j], modes[i], P);
  CHECK((gram - MatrixXc::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
}
