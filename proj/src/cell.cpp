#include "hommax/cell.hpp"

#include "hommax/krylov.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

namespace hommax {

namespace {

PeriodicField constant_field(const GridShape& shape, const Vec3c& v) {
  PeriodicField f(shape, 3);
  f.set_vector(0, v);
  return f;
}

}  // namespace

CellCorrector solve_cell_corrector(const GalerkinTensor& A, const Vec3c& eta,
                                   const CellSolveOptions& opts) {
  const GridShape& shape = A.lattice();
  const Vec3 zero = Vec3::Zero();
  const auto n = static_cast<Eigen::Index>(shape.size());

  // Unknowns: W at k != 0; W(0) is pinned to zero.
  auto lift = [&](const VectorXc& w) {
    VectorXc full = w;
    full(0) = 0.0;
    return PeriodicField(shape, 1, std::move(full));
  };
  auto op = [&](const VectorXc& w) -> VectorXc {
    const PeriodicField flux = A.apply(shifted_gradient(lift(w), zero));
    VectorXc out = -shifted_divergence(flux, zero).coeffs();
    out(0) = 0.0;
    return out;
  };
  const PeriodicField a_eta = A.apply(constant_field(shape, eta));
  VectorXc rhs = shifted_divergence(a_eta, zero).coeffs();
  rhs(0) = 0.0;

  VectorXc inv_symbol(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double k2 = shifted_wavevector(shape, static_cast<std::size_t>(i), zero).squaredNorm();
    inv_symbol(i) = k2 > 0.0 ? 1.0 / k2 : 0.0;
  }
  auto precond = [&](const VectorXc& r) -> VectorXc { return r.cwiseProduct(inv_symbol); };

  const int cap = opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(10 * n);
  const double anorm = a_eta.coeffs().norm();

  CellCorrector out;
  if (rhs.norm() == 0.0) {
    out.potential = PeriodicField(shape, 1);
    return out;
  }
  // The CG residual is measured on the preconditioned-free weak form; tighten
  // until the reported flux divergence meets rtol.
  double cg_tol = opts.rtol;
  VectorXc x = VectorXc::Zero(n);
  for (int attempt = 0; attempt < 4; ++attempt) {
    const CgResult cg = conjugate_gradient(op, rhs, x, cg_tol, cap, precond);
    x = cg.x;
    out.iterations += cg.iterations;
    out.potential = lift(x);
    const PeriodicField flux = corrected_field(out, eta);
    out.residual = shifted_divergence(A.apply(flux), zero).coeffs().norm() / anorm;
    if (out.residual <= opts.rtol) return out;
    if (!cg.converged) break;
    cg_tol *= 1e-2;
  }
  throw NumericalError(fmt::format("cell corrector: residual {:.3e} above tolerance {:.1e} after {} iterations",
                                   out.residual, opts.rtol, out.iterations));
}

PeriodicField corrected_field(const CellCorrector& c, const Vec3c& eta) {
  PeriodicField g = shifted_gradient(c.potential, Vec3::Zero());
  g.set_vector(0, g.vector_at(0) + eta);
  return g;
}

Homogenization homogenized_tensor(const GalerkinTensor& A, const CellSolveOptions& opts) {
  Homogenization h;
  std::array<PeriodicField, 3> fields;
  std::array<PeriodicField, 3> fluxes;
  for (int i = 0; i < 3; ++i) {
    h.correctors[i] = solve_cell_corrector(A, Vec3c::Unit(i), opts);
    fields[i] = corrected_field(h.correctors[i], Vec3c::Unit(i));
    fluxes[i] = A.apply(fields[i]);
    h.tensor.col(i) = fluxes[i].mean_vector();
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) h.energy_tensor(i, j) = cell_inner(fluxes[j], fields[i]);
  }
  h.hermiticity_defect = (h.tensor - h.tensor.adjoint()).norm();
  Eigen::SelfAdjointEigenSolver<Mat3c> es(0.5 * (h.tensor + h.tensor.adjoint()), Eigen::EigenvaluesOnly);
  h.min_eigenvalue = es.eigenvalues()(0);
  return h;
}

namespace {

// Loewdin orthonormalization with Gram matrix g: returns g^{-1/2}.
MatrixXc inverse_sqrt(const MatrixXc& g) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(0.5 * (g + g.adjoint()));
  if (es.eigenvalues().minCoeff() <= 0.0) throw NumericalError("kernel basis: singular Gram matrix");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace

std::vector<BlochMode> kernel_basis(const GalerkinTensor& P, const GalerkinTensor& Q,
                                    const Homogenization& hp, const Homogenization& hq) {
  const GridShape& shape = Q.lattice();
  if (!(P.lattice() == shape)) throw InputError("kernel_basis: P and Q lattices differ");

  std::array<PeriodicField, 3> a_fields, u_fields, v_fields;
  for (int i = 0; i < 3; ++i) {
    a_fields[i] = corrected_field(hq.correctors[i], Vec3c::Unit(i));
    u_fields[i] = Q.apply(a_fields[i]);
    v_fields[i] = corrected_field(hp.correctors[i], Vec3c::Unit(i));
  }
  // U-block Gram: <Q^{-1}U_j, U_i>; V-block Gram: <P V_j, V_i>. The blocks are orthogonal.
  MatrixXc gu(3, 3), gv(3, 3);
  std::array<PeriodicField, 3> pv;
  for (int j = 0; j < 3; ++j) pv[j] = P.apply(v_fields[j]);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      gu(i, j) = cell_inner(a_fields[j], u_fields[i]);
      gv(i, j) = cell_inner(pv[j], v_fields[i]);
    }
  }
  const MatrixXc su = inverse_sqrt(gu);
  const MatrixXc sv = inverse_sqrt(gv);

  std::vector<BlochMode> modes;
  for (int c = 0; c < 3; ++c) {
    BlochMode m;
    m.Phi = PeriodicField(shape, 3);
    m.QinvPhi = PeriodicField(shape, 3);
    m.Psi = PeriodicField(shape, 3);
    for (int i = 0; i < 3; ++i) {
      m.Phi = m.Phi + u_fields[i] * su(i, c);
      m.QinvPhi = m.QinvPhi + a_fields[i] * su(i, c);
    }
    m.slot = c;
    m.multiplicity = 6;
    modes.push_back(std::move(m));
  }
  for (int c = 0; c < 3; ++c) {
    BlochMode m;
    m.Phi = PeriodicField(shape, 3);
    m.QinvPhi = PeriodicField(shape, 3);
    m.Psi = PeriodicField(shape, 3);
    for (int i = 0; i < 3; ++i) m.Psi = m.Psi + v_fields[i] * sv(i, c);
    m.slot = 3 + c;
    m.multiplicity = 6;
    modes.push_back(std::move(m));
  }
  return modes;
}

}  // namespace hommax
