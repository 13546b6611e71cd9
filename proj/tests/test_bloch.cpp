#include "doctest.h"

#include "hommax/bloch.hpp"
#include "hommax/cell.hpp"

#include <algorithm>
#include <random>

using namespace hommax;

namespace {

// Analytic vacuum spectrum: +-|xi + 2 pi k| twice per lattice vector, plus the
// two extra unconstrained constants at xi = 0.
std::vector<double> vacuum_spectrum(const GridShape& s, const Vec3& xi) {
  std::vector<double> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto k = s.wavenumbers(i);
    const double w = (xi + 2 * M_PI * Vec3(k[0], k[1], k[2])).norm();
    const int copies = (w < 1e-12) ? 3 : 2;
    for (int c = 0; c < copies; ++c) {
      out.push_back(w);
      out.push_back(-w);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PeriodicField random_field(std::mt19937_64& rng, const GridShape& s) {
  std::normal_distribution<double> g;
  PeriodicField f(s, 3);
  for (Eigen::Index i = 0; i < f.coeffs().size(); ++i) f.coeffs()(i) = cplx(g(rng), g(rng));
  return f;
}

struct Setup {
  GridShape s;
  GalerkinTensor P, Q;
  BlochProblem prob;
  Setup(GridShape shape, const MaterialTensor& p, const MaterialTensor& q)
      : s(shape), P(p, shape), Q(q, shape), prob(P, Q) {}
};

}  // namespace

TEST_CASE("operator handle: plane-wave curl, kernel annihilation and anti-Hermitian pairing") {
  const Setup vac(GridShape(4, 4, 4), MaterialTensor::identity(), MaterialTensor::identity());
  const ShiftedOperator R(vac.prob, Vec3::Zero());
  PeriodicField V(vac.s, 3);
  const std::size_t k010 = vac.s.index_of_wavenumber({0, 1, 0});
  V.at(0, k010) = 1.0;
  const auto out = R.apply(PeriodicField(vac.s, 3), V);
  CHECK(std::abs(out.first.at(2, k010) - cplx(0.0, -2 * M_PI)) < 1e-14);
  CHECK(out.first.coeffs().norm() == doctest::Approx(2 * M_PI));
  CHECK(out.second.coeffs().norm() == 0.0);

  const Setup lam(GridShape(8, 2, 2), MaterialTensor::identity(), MaterialTensor::laminate());
  const auto modes = kernel_basis(lam.P, lam.Q, homogenized_tensor(lam.P), homogenized_tensor(lam.Q));
  const ShiftedOperator R0(lam.prob, Vec3::Zero());
  for (const BlochMode& m : modes) {
    const auto r = R0.apply(m.Phi, m.Psi);
    CHECK(r.first.coeffs().norm() < 1e-10);
    CHECK(r.second.coeffs().norm() < 1e-10);
  }

  std::mt19937_64 rng(12);
  const ShiftedOperator Rx(lam.prob, Vec3(0.3, -0.8, 1.1));
  const PeriodicField U = random_field(rng, lam.s), W = random_field(rng, lam.s);
  const cplx pr = Rx.pairing(Rx.apply(U, W), U, W);
  CHECK(std::abs(pr.real()) < 1e-10 * std::abs(pr));
}

TEST_CASE("constraint space dimensions and weighted orthonormality") {
  const GridShape s(4, 4, 4);
  const std::size_t n = s.size();
  CHECK(constraint_nullspace(s, Vec3(M_PI, 0, 0)).dimension() == static_cast<Eigen::Index>(4 * n));
  CHECK(constraint_nullspace(s, Vec3::Zero()).dimension() == static_cast<Eigen::Index>(4 * n + 2));

  const Setup lam(GridShape(4, 2, 2), MaterialTensor::separable_trig(2.0, Vec3(0.7, 0.0, 0.0)),
                  MaterialTensor::laminate());
  for (const Vec3& xi : {Vec3(0, 0, 0), Vec3(0.7, -0.3, 0.1)}) {
    const MatrixXc basis = constraint_basis(lam.prob, constraint_nullspace(lam.s, xi));
    const MatrixXc g = weighted_gram(lam.prob, basis);
    CHECK((g - MatrixXc::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("vacuum bands match the analytic dispersion") {
  const Setup vac(GridShape(4, 4, 4), MaterialTensor::identity(), MaterialTensor::identity());
  for (const Vec3& xi : {Vec3(0, 0, 0), Vec3(M_PI, 0, 0), Vec3(0.7, -0.3, 0.1)}) {
    const BlochSlice slice = bloch_eigensolve(vac.prob, xi, ModeSelection::smallest(14));
    const auto expect = vacuum_spectrum(vac.s, xi);
    REQUIRE(slice.eigenvalues.size() == expect.size());
    CHECK(static_cast<std::size_t>(slice.space_dimension) == expect.size());
    double err = 0.0;
    for (std::size_t i = 0; i < expect.size(); ++i) err = std::max(err, std::abs(slice.eigenvalues[i] - expect[i]));
    CHECK(err < 1e-10);
    for (const BlochMode& m : slice.modes) {
      const ModeResiduals r = mode_residuals(vac.prob, m);
      CHECK(r.equation < 1e-8);
      CHECK(r.constraint < 1e-8);
      CHECK(r.norm_defect < 1e-10);
    }
  }
  const BlochSlice s0 = bloch_eigensolve(vac.prob, Vec3::Zero(), ModeSelection::up_to(7.0));
  const BandGroup* g = s0.group_near(2 * M_PI);
  REQUIRE(g != nullptr);
  CHECK(g->multiplicity == 12);
  CHECK(s0.group_near(0.0)->multiplicity == 6);
}

TEST_CASE("laminate kernel, spectral gap off zero, orthonormality and residuals") {
  const Setup lam(GridShape(8, 2, 2), MaterialTensor::identity(), MaterialTensor::laminate());
  const BlochSlice s0 = bloch_eigensolve(lam.prob, Vec3::Zero(), ModeSelection::up_to(12.0));
  const BandGroup* zero = s0.group_near(0.0);
  REQUIRE(zero != nullptr);
  CHECK(zero->multiplicity == 6);
  const auto kernel = kernel_basis(lam.P, lam.Q, homogenized_tensor(lam.P), homogenized_tensor(lam.Q));
  const int zidx = static_cast<int>(zero - s0.groups.data());
  CHECK(subspace_angle(kernel, s0.modes_of(zidx), lam.P) <= 1e-8);

  const auto n = static_cast<Eigen::Index>(s0.modes.size());
  MatrixXc gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = weighted_inner(s0.modes[j], s0.modes[i], lam.P);
  CHECK((gram - MatrixXc::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  for (const BlochMode& m : s0.modes) {
    const ModeResiduals r = mode_residuals(lam.prob, m);
    CHECK(r.equation < 1e-8);
    CHECK(r.constraint < 1e-8);
  }

  const BlochSlice spi = bloch_eigensolve(lam.prob, Vec3(M_PI, 0, 0), ModeSelection::smallest(2));
  double min_abs = 1e300;
  for (double l : spi.eigenvalues) min_abs = std::min(min_abs, std::abs(l));
  CHECK(min_abs > 0.1);
}

TEST_CASE("sign-flip symmetry with conjugate eigenspaces") {
  const Setup lam(GridShape(8, 2, 2), MaterialTensor::identity(), MaterialTensor::laminate());
  for (const Vec3& xi : {Vec3(0, 0, 0), Vec3(0.7, -0.3, 0.1)}) {
    const BlochSlice slice = bloch_eigensolve(lam.prob, xi, ModeSelection::up_to(9.0));
    const SymmetryReport rep = spectrum_symmetry_check(lam.prob, slice);
    CHECK(rep.applicable);
    CHECK(rep.passed);
    CHECK(rep.groups_checked > 2);
    CHECK(rep.max_angle <= 1e-8);
  }
  const Setup vac(GridShape(4, 4, 4), MaterialTensor::identity(), MaterialTensor::identity());
  const BlochSlice vs = bloch_eigensolve(vac.prob, Vec3(0.2, 0.1, -0.4), ModeSelection::smallest(6));
  CHECK(spectrum_symmetry_check(vac.prob, vs).passed);

  Mat3c c = 2.0 * Mat3c::Identity();
  c(0, 1) = cplx(0, 0.5);
  c(1, 0) = cplx(0, -0.5);
  const Setup cx(GridShape(2, 2, 2), MaterialTensor::fourier({{{0, 0, 0}, c}}), MaterialTensor::identity());
  const SymmetryReport na = spectrum_symmetry_check(cx.prob, bloch_eigensolve(cx.prob, Vec3::Zero()));
  CHECK_FALSE(na.applicable);
  CHECK(na.note.find("not applicable") != std::string::npos);
}

TEST_CASE("mode selection completes eigenspaces") {
  const Setup vac(GridShape(4, 4, 4), MaterialTensor::identity(), MaterialTensor::identity());
  const BlochSlice s = bloch_eigensolve(vac.prob, Vec3::Zero(), ModeSelection::smallest(7));
  // zero space (6) plus one full +-2 pi group (12)
  CHECK(s.modes.size() == 18);
  for (const BlochMode& m : s.modes) CHECK(m.multiplicity == static_cast<int>(s.modes_of(m.band_index).size()));
}

TEST_CASE("full spectrum of a large reduced problem keeps its residuals") {
  // 512 x 512 reduced block: large enough to exercise the blocked LAPACK paths.
  const Setup lam(GridShape(8, 8, 2), MaterialTensor::laminate(3.0, 1.0), MaterialTensor::laminate());
  const BlochSlice s = bloch_eigensolve(lam.prob, Vec3(0.7, -0.3, 0.1), ModeSelection::all());
  REQUIRE(s.modes.size() == 512);
  double eq = 0.0, norm = 0.0;
  for (const BlochMode& m : s.modes) {
    const ModeResiduals r = mode_residuals(lam.prob, m);
    eq = std::max(eq, r.equation);
    norm = std::max(norm, r.norm_defect);
  }
  CHECK(eq < 1e-8);
  CHECK(norm < 1e-10);
  const SymmetryReport rep = spectrum_symmetry_check(lam.prob, s);
  CHECK(rep.passed);
}
