#include "hommax/bloch.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace hommax {

namespace {

constexpr double kZeroWavevector = 1e-9;

MatrixXc hermitian_inverse(const MatrixXc& a, const char* what) {
  Eigen::LLT<MatrixXc> llt(0.5 * (a + a.adjoint()));
  if (llt.info() != Eigen::Success) {
    throw MaterialError(fmt::format("{}: Galerkin matrix is not positive definite", what));
  }
  MatrixXc inv = llt.solve(MatrixXc::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.adjoint());
}

// Orthonormal real frame of the plane orthogonal to w (all of R^3 when w = 0).
std::vector<Vec3> transverse_frame(const Vec3& w) {
  if (w.norm() < kZeroWavevector) return {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  const Vec3 u = w.normalized();
  Eigen::Index axis = 0;
  u.cwiseAbs().minCoeff(&axis);
  const Vec3 t1 = u.cross(Vec3::Unit(axis)).normalized();
  const Vec3 t2 = u.cross(t1);
  return {t1, t2};
}

struct Svd {
  MatrixXc left;   // W
  Eigen::VectorXd sigma;
  MatrixXc right;  // Z, with A = W diag(sigma) Z^H
};

Svd singular_value_decomposition(MatrixXc a) {
  const auto m = static_cast<lapack_int>(a.rows());
  const auto n = static_cast<lapack_int>(a.cols());
  Svd out;
  out.sigma.resize(std::min(m, n));
  out.left.resize(m, m);
  MatrixXc vt(n, n);
  Eigen::VectorXd superb(std::max<Eigen::Index>(std::min(m, n), 1));
  // QR-iteration driver: the divide-and-conquer zgesdd of the reference LAPACK
  // build in use returns inconsistent factors beyond a few hundred rows.
  const lapack_int info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'A', 'A', m, n, a.data(), m, out.sigma.data(),
                                         out.left.data(), m, vt.data(), n, superb.data());
  if (info != 0) throw NumericalError(fmt::format("zgesvd failed (info {})", info));
  out.right = vt.adjoint();
  return out;
}

// Rows (a, k) of K X for a stacked 3n x c matrix X.
MatrixXc apply_curl_rows(const GridShape& lattice, const Vec3& xi, const MatrixXc& x) {
  const auto n = static_cast<Eigen::Index>(lattice.size());
  MatrixXc out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 w = shifted_wavevector(lattice, static_cast<std::size_t>(i), xi);
    out.row(i) = kI * (w(1) * x.row(2 * n + i) - w(2) * x.row(n + i));
    out.row(n + i) = kI * (w(2) * x.row(i) - w(0) * x.row(2 * n + i));
    out.row(2 * n + i) = kI * (w(0) * x.row(n + i) - w(1) * x.row(i));
  }
  return out;
}

PeriodicField field_from(const GridShape& lattice, const VectorXc& v) {
  return {lattice, 3, v};
}

}  // namespace

BlochProblem::BlochProblem(const GalerkinTensor& P, const GalerkinTensor& Q)
    : P_(P), Q_(Q), Pdense_(P.dense()), Qdense_(Q.dense()) {
  if (!(P.lattice() == Q.lattice())) throw InputError("BlochProblem: P and Q lattices differ");
  Pinv_ = hermitian_inverse(Pdense_, "P");
  Qinv_ = hermitian_inverse(Qdense_, "Q");
}

PeriodicField apply_shifted_curl(const PeriodicField& v, const Vec3& xi) { return shifted_curl(v, xi); }

PeriodicField ShiftedOperator::apply_Qinv(const PeriodicField& U) const {
  return field_from(problem_.lattice(), problem_.Qinv() * U.coeffs());
}

std::pair<PeriodicField, PeriodicField> ShiftedOperator::apply(const PeriodicField& U,
                                                               const PeriodicField& V) const {
  return {shifted_curl(V, xi_), shifted_curl(apply_Qinv(U), xi_) * -1.0};
}

cplx ShiftedOperator::pairing(const std::pair<PeriodicField, PeriodicField>& r,
                              const PeriodicField& U, const PeriodicField& V) const {
  return cell_inner(r.first, apply_Qinv(U)) + cell_inner(r.second, V);
}

ConstraintSpace constraint_nullspace(const GridShape& lattice, const Vec3& xi) {
  const auto n = static_cast<Eigen::Index>(lattice.size());
  std::vector<Eigen::Triplet<cplx>> trip;
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const Vec3& t : transverse_frame(shifted_wavevector(lattice, static_cast<std::size_t>(i), xi))) {
      for (int a = 0; a < 3; ++a) {
        if (t(a) != 0.0) trip.emplace_back(a * n + i, col, t(a));
      }
      ++col;
    }
  }
  ConstraintSpace s;
  s.xi = xi;
  s.TU.resize(3 * n, col);
  s.TU.setFromTriplets(trip.begin(), trip.end());
  s.TV = s.TU;
  return s;
}

MatrixXc constraint_basis(const BlochProblem& problem, const ConstraintSpace& space) {
  const Eigen::Index n3 = space.TU.rows();
  const MatrixXc QiT = problem.Qinv() * space.TU;
  const MatrixXc PiT = problem.Pinv() * space.TV;
  const MatrixXc SQ = MatrixXc(space.TU.adjoint() * QiT);
  const MatrixXc SP = MatrixXc(space.TV.adjoint() * PiT);
  const Eigen::LLT<MatrixXc> lq(SQ), lp(SP);
  const Eigen::Index ru = space.TU.cols(), rv = space.TV.cols();
  MatrixXc basis = MatrixXc::Zero(2 * n3, ru + rv);
  basis.topLeftCorner(n3, ru) =
      (lq.matrixL().solve(MatrixXc(space.TU.adjoint()))).adjoint();
  basis.bottomRightCorner(n3, rv) = (lp.matrixL().solve(PiT.adjoint())).adjoint();
  return basis;
}

MatrixXc weighted_gram(const BlochProblem& problem, const MatrixXc& columns) {
  const Eigen::Index n3 = columns.rows() / 2;
  const auto u = columns.topRows(n3);
  const auto v = columns.bottomRows(n3);
  return u.adjoint() * problem.Qinv() * u + v.adjoint() * problem.Pdense() * v;
}

double degeneracy_tolerance(double lambda) { return std::max(1e-8, 1e-8 * std::abs(lambda)); }

const BandGroup* BlochSlice::group_near(double lambda) const {
  for (const BandGroup& g : groups) {
    if (std::abs(g.lambda - lambda) <= 10.0 * degeneracy_tolerance(lambda)) return &g;
  }
  return nullptr;
}

std::vector<BlochMode> BlochSlice::modes_of(int band_index) const {
  std::vector<BlochMode> out;
  for (const BlochMode& m : modes) {
    if (m.band_index == band_index) out.push_back(m);
  }
  return out;
}

BlochSlice bloch_eigensolve(const BlochProblem& problem, const Vec3& xi, const ModeSelection& sel) {
  const GridShape& lattice = problem.lattice();
  const ConstraintSpace space = constraint_nullspace(lattice, xi);

  const MatrixXc QiT = problem.Qinv() * space.TU;
  const MatrixXc PiT = problem.Pinv() * space.TV;
  const MatrixXc SQ = MatrixXc(space.TU.adjoint() * QiT);
  const MatrixXc SP = MatrixXc(space.TV.adjoint() * PiT);
  const Eigen::LLT<MatrixXc> lq(0.5 * (SQ + SQ.adjoint()));
  const Eigen::LLT<MatrixXc> lp(0.5 * (SP + SP.adjoint()));
  if (lq.info() != Eigen::Success || lp.info() != Eigen::Success) {
    throw NumericalError("bloch: weighted Gram matrix of the constraint frames is not positive definite");
  }

  // Ohat = L_Q^{-1} (i T^H Q^{-1} K P^{-1} T) L_P^{-H}
  MatrixXc ohat = kI * (QiT.adjoint() * apply_curl_rows(lattice, xi, PiT));
  ohat = lq.matrixL().solve(ohat);
  ohat = lp.matrixL().solve(MatrixXc(ohat.adjoint())).adjoint();
  const Svd svd = singular_value_decomposition(std::move(ohat));

  // Eigenvalue +-sigma_i with vector (w_i, +-z_i) / sqrt 2.
  struct Entry {
    double lambda;
    int sign;
    Eigen::Index index;
  };
  std::vector<Entry> entries;
  const Eigen::Index r = svd.sigma.size();
  for (Eigen::Index i = 0; i < r; ++i) {
    entries.push_back({svd.sigma(i), +1, i});
    entries.push_back({-svd.sigma(i), -1, i});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.lambda < b.lambda; });

  BlochSlice slice;
  slice.xi = xi;
  slice.space_dimension = space.dimension();
  for (const Entry& e : entries) slice.eigenvalues.push_back(e.lambda);

  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) {
      const double gap = entries[i].lambda - entries[i - 1].lambda;
      const double tol = degeneracy_tolerance(std::max(std::abs(entries[i].lambda), std::abs(entries[i - 1].lambda)));
      if (gap <= tol) {
        ++slice.groups.back().multiplicity;
        continue;
      }
      if (gap <= 1e3 * tol) slice.grouping_ambiguous = true;
    }
    slice.groups.push_back({entries[i].lambda, 1, static_cast<int>(i)});
  }
  for (BandGroup& g : slice.groups) {
    double sum = 0.0;
    for (int i = g.first; i < g.first + g.multiplicity; ++i) sum += entries[i].lambda;
    g.lambda = sum / g.multiplicity;
  }

  std::vector<int> chosen;
  if (sel.lambda_max) {
    for (std::size_t g = 0; g < slice.groups.size(); ++g) {
      if (std::abs(slice.groups[g].lambda) <= *sel.lambda_max) chosen.push_back(static_cast<int>(g));
    }
  } else if (sel.n_modes) {
    std::vector<int> order(slice.groups.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = static_cast<int>(g);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(slice.groups[a].lambda) < std::abs(slice.groups[b].lambda);
    });
    int count = 0;
    for (int g : order) {
      if (count >= *sel.n_modes) break;
      chosen.push_back(g);
      count += slice.groups[g].multiplicity;
    }
    std::sort(chosen.begin(), chosen.end());
  } else {
    for (std::size_t g = 0; g < slice.groups.size(); ++g) chosen.push_back(static_cast<int>(g));
  }

  int total = 0;
  for (int g : chosen) total += slice.groups[g].multiplicity;
  MatrixXc yu(r, total), yv(r, total);
  std::vector<std::pair<int, int>> labels;
  int col = 0;
  for (int g : chosen) {
    const BandGroup& grp = slice.groups[g];
    for (int s = 0; s < grp.multiplicity; ++s, ++col) {
      const Entry& e = entries[grp.first + s];
      yu.col(col) = svd.left.col(e.index) / std::sqrt(2.0);
      yv.col(col) = static_cast<double>(e.sign) * svd.right.col(e.index) / std::sqrt(2.0);
      labels.emplace_back(g, s);
    }
  }
  const MatrixXc c = lq.matrixU().solve(yu);
  const MatrixXc d = lp.matrixU().solve(yv);
  const MatrixXc phi = space.TU * c;
  const MatrixXc qinv_phi = QiT * c;
  const MatrixXc psi = PiT * d;
  for (int k = 0; k < total; ++k) {
    const BandGroup& grp = slice.groups[labels[k].first];
    BlochMode m;
    m.xi = xi;
    m.lambda = entries[grp.first + labels[k].second].lambda;
    m.Phi = field_from(lattice, phi.col(k));
    m.QinvPhi = field_from(lattice, qinv_phi.col(k));
    m.Psi = field_from(lattice, psi.col(k));
    m.band_index = labels[k].first;
    m.slot = labels[k].second;
    m.multiplicity = grp.multiplicity;
    slice.modes.push_back(std::move(m));
  }
  return slice;
}

ModeResiduals mode_residuals(const BlochProblem& problem, const BlochMode& mode) {
  ModeResiduals r;
  const PeriodicField k_psi = shifted_curl(mode.Psi, mode.xi);
  const PeriodicField k_a = shifted_curl(mode.QinvPhi, mode.xi);
  const PeriodicField p_psi = problem.P().apply(mode.Psi);
  const double scale =
      std::max(1.0, std::abs(mode.lambda)) * (mode.Phi.coeffs().norm() + mode.Psi.coeffs().norm());
  const double eq1 = (mode.Phi * mode.lambda - k_psi * kI).coeffs().norm();
  const double eq2 = (p_psi * mode.lambda + k_a * kI).coeffs().norm();
  r.equation = std::max(eq1, eq2) / scale;

  // |(xi + 2 pi k) . f| relative to max|xi + 2 pi k| |f|
  auto transversality = [&](const PeriodicField& f) {
    double num = 0.0, wmax = 0.0;
    for (std::size_t i = 0; i < f.lattice_size(); ++i) {
      const Vec3 w = shifted_wavevector(f.shape(), i, mode.xi);
      const Vec3c v = f.vector_at(i);
      num += std::norm(w(0) * v(0) + w(1) * v(1) + w(2) * v(2));
      wmax = std::max(wmax, w.norm());
    }
    const double den = wmax * f.coeffs().norm();
    return den > 0.0 ? std::sqrt(num) / den : 0.0;
  };
  r.constraint = std::max(transversality(mode.Phi), transversality(p_psi));
  r.norm_defect = std::abs(weighted_inner(mode, mode, problem.P()) - 1.0);
  return r;
}

namespace {

double one_sided_angle(const std::vector<BlochMode>& a, const std::vector<BlochMode>& b,
                       const GalerkinTensor& P) {
  const auto na = static_cast<Eigen::Index>(a.size());
  std::vector<BlochMode> resid = a;
  for (Eigen::Index i = 0; i < na; ++i) {
    for (const BlochMode& bj : b) {
      const cplx c = weighted_inner(a[i], bj, P);
      resid[i].Phi = resid[i].Phi - bj.Phi * c;
      resid[i].QinvPhi = resid[i].QinvPhi - bj.QinvPhi * c;
      resid[i].Psi = resid[i].Psi - bj.Psi * c;
    }
  }
  MatrixXc g(na, na);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) g(i, j) = weighted_inner(resid[j], resid[i], P);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
  const double s = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  return std::asin(std::min(1.0, s));
}

}  // namespace

double subspace_angle(const std::vector<BlochMode>& a, const std::vector<BlochMode>& b,
                      const GalerkinTensor& P) {
  if (a.size() != b.size()) return kPi / 2;
  if (a.empty()) return 0.0;
  return std::max(one_sided_angle(a, b, P), one_sided_angle(b, a, P));
}

Vec3 mirrored_fiber(const GridShape& lattice, const Vec3& xi) {
  Vec3 out = -xi;
  for (int a = 0; a < 3; ++a) {
    if (lattice[a] > 1) out(a) += kTwoPi;
  }
  return out;
}

BlochMode conjugate_mode(const BlochMode& m) {
  const GridShape& shape = m.Phi.shape();
  std::array<int, 3> s{};
  for (int a = 0; a < 3; ++a) s[a] = shape[a] > 1 ? 1 : 0;
  auto reflect = [&](const PeriodicField& f) {
    PeriodicField out(shape, f.components());
    for (std::size_t i = 0; i < shape.size(); ++i) {
      const auto k = shape.wavenumbers(i);
      const std::size_t j = shape.index_of_wavenumber({-k[0] - s[0], -k[1] - s[1], -k[2] - s[2]});
      for (int c = 0; c < f.components(); ++c) out.at(c, j) = std::conj(f.at(c, i));
    }
    return out;
  };
  BlochMode out = m;
  out.xi = mirrored_fiber(shape, m.xi);
  out.lambda = -m.lambda;
  out.Phi = reflect(m.Phi);
  out.QinvPhi = reflect(m.QinvPhi);
  out.Psi = reflect(m.Psi);
  return out;
}

SymmetryReport spectrum_symmetry_check(const BlochProblem& problem, const BlochSlice& slice,
                                       double angle_tol) {
  SymmetryReport rep;
  if (!problem.P().material().is_real() || !problem.Q().material().is_real()) {
    rep.applicable = false;
    rep.passed = true;
    rep.note = "not applicable: P or Q has a nonzero imaginary part";
    return rep;
  }
  const auto& ev = slice.eigenvalues;
  const std::size_t n = ev.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = std::max(1.0, std::abs(ev[i]));
    rep.eigenvalue_mismatch = std::max(rep.eigenvalue_mismatch, std::abs(ev[i] + ev[n - 1 - i]) / scale);
  }
  double lmax = 0.0;
  for (const BlochMode& m : slice.modes) lmax = std::max(lmax, std::abs(m.lambda));
  const Vec3 xi_m = mirrored_fiber(problem.lattice(), slice.xi);
  const BlochSlice mirror =
      bloch_eigensolve(problem, xi_m, ModeSelection::up_to(lmax + degeneracy_tolerance(lmax) * 10.0));

  bool groups_ok = true;
  for (std::size_t g = 0; g < slice.groups.size(); ++g) {
    const std::vector<BlochMode> own = slice.modes_of(static_cast<int>(g));
    if (own.empty()) continue;
    std::vector<BlochMode> conj;
    for (const BlochMode& m : own) conj.push_back(conjugate_mode(m));
    const BandGroup* partner = mirror.group_near(-slice.groups[g].lambda);
    if (!partner || partner->multiplicity != slice.groups[g].multiplicity) {
      groups_ok = false;
      rep.max_angle = kPi / 2;
      continue;
    }
    const int pidx = static_cast<int>(partner - mirror.groups.data());
    const double angle = subspace_angle(conj, mirror.modes_of(pidx), problem.P());
    if (angle > rep.max_angle) {
      rep.max_angle = angle;
      rep.worst_lambda = slice.groups[g].lambda;
      rep.worst_gap = std::numeric_limits<double>::infinity();
      if (g > 0) rep.worst_gap = slice.groups[g].lambda - slice.groups[g - 1].lambda;
      if (g + 1 < slice.groups.size())
        rep.worst_gap = std::min(rep.worst_gap, slice.groups[g + 1].lambda - slice.groups[g].lambda);
    }
    ++rep.groups_checked;
  }
  rep.passed = groups_ok && rep.eigenvalue_mismatch <= 1e-10 && rep.max_angle <= angle_tol;
  rep.note = fmt::format("mirrored fiber ({:.6f}, {:.6f}, {:.6f})", xi_m(0), xi_m(1), xi_m(2));
  return rep;
}

}  // namespace hommax
