#pragma once

// Shifted Maxwell eigenproblem on a Bloch fiber xi:
//
//   i lambda U + K V = 0,   i lambda P V - K Q^{-1} U = 0,   K = i(xi + 2 pi k) x
//
// restricted to the constraint space  (xi + 2 pi k) . U = (xi + 2 pi k) . (P V) = 0.
//
// Discretization: plane waves on the lattice of a GridShape; P and Q act by
// their Galerkin matrices and Q^{-1} is the inverse of the Galerkin matrix of Q.
// With U = T_U c and P V = T_V d (T the per-wavevector transverse frames) both
// the constraints and the eigen-equations hold exactly in the discrete space.
// After Cholesky factorization of the weighted Gram matrices the problem is a
// Hermitian block [[0, O], [O^H, 0]] whose eigenpairs come from the SVD of O.

#include "hommax/mode.hpp"

#include <Eigen/SparseCore>

#include <optional>
#include <utility>
#include <vector>

namespace hommax {

using SparseXc = Eigen::SparseMatrix<cplx>;

// xi-independent dense data for one (P, Q) pair on one lattice.
class BlochProblem {
 public:
  BlochProblem(const GalerkinTensor& P, const GalerkinTensor& Q);

  const GalerkinTensor& P() const { return P_; }
  const GalerkinTensor& Q() const { return Q_; }
  const GridShape& lattice() const { return Q_.lattice(); }
  const MatrixXc& Qinv() const { return Qinv_; }
  const MatrixXc& Pinv() const { return Pinv_; }
  const MatrixXc& Pdense() const { return Pdense_; }
  const MatrixXc& Qdense() const { return Qdense_; }

 private:
  GalerkinTensor P_;
  GalerkinTensor Q_;
  MatrixXc Pdense_, Qdense_, Pinv_, Qinv_;
};

// K = i(xi + 2 pi k) x applied coefficient-wise.
PeriodicField apply_shifted_curl(const PeriodicField& v, const Vec3& xi);

// Matrix-free handle for R(U, V) = (K V, -K Q^{-1} U).
class ShiftedOperator {
 public:
  ShiftedOperator(const BlochProblem& problem, Vec3 xi) : problem_(problem), xi_(std::move(xi)) {}

  std::pair<PeriodicField, PeriodicField> apply(const PeriodicField& U, const PeriodicField& V) const;
  PeriodicField apply_Qinv(const PeriodicField& U) const;
  // Integral of R_1 . conj(Q^{-1}U') + R_2 . conj(V'); purely imaginary when (U', V') = (U, V).
  cplx pairing(const std::pair<PeriodicField, PeriodicField>& r, const PeriodicField& U,
               const PeriodicField& V) const;

 private:
  const BlochProblem& problem_;
  Vec3 xi_;
};

// Null space of the discrete constraint map.
struct ConstraintSpace {
  Vec3 xi;
  SparseXc TU;  // 3n x rU, orthonormal transverse frames for U
  SparseXc TV;  // 3n x rV, orthonormal transverse frames for P V
  Eigen::Index dimension() const { return TU.cols() + TV.cols(); }
};

ConstraintSpace constraint_nullspace(const GridShape& lattice, const Vec3& xi);

// Dense weighted-orthonormal basis: columns are (U; V) stacked (6n rows).
// Intended for small lattices.
MatrixXc constraint_basis(const BlochProblem& problem, const ConstraintSpace& space);

// Weighted Gram matrix of stacked (U; V) columns.
MatrixXc weighted_gram(const BlochProblem& problem, const MatrixXc& columns);

struct ModeSelection {
  std::optional<double> lambda_max;  // keep |lambda| <= lambda_max
  std::optional<int> n_modes;        // or the n_modes smallest |lambda|, completed to whole eigenspaces
  static ModeSelection all() { return {}; }
  static ModeSelection up_to(double l) { return {l, std::nullopt}; }
  static ModeSelection smallest(int n) { return {std::nullopt, n}; }
};

struct BandGroup {
  double lambda = 0.0;
  int multiplicity = 0;
  int first = 0;  // index into BlochSlice::eigenvalues
};

struct BlochSlice {
  Vec3 xi = Vec3::Zero();
  Eigen::Index space_dimension = 0;
  std::vector<double> eigenvalues;  // all, ascending
  std::vector<BandGroup> groups;    // eigenspaces, ascending
  std::vector<BlochMode> modes;     // selected eigenspaces, complete
  bool grouping_ambiguous = false;  // some gap within 1e3 x the degeneracy band

  const BandGroup* group_near(double lambda) const;
  std::vector<BlochMode> modes_of(int band_index) const;
};

double degeneracy_tolerance(double lambda);

BlochSlice bloch_eigensolve(const BlochProblem& problem, const Vec3& xi,
                            const ModeSelection& sel = ModeSelection::all());

struct ModeResiduals {
  double equation = 0.0;    // max over both equations, relative
  double constraint = 0.0;  // max over both constraints, relative
  double norm_defect = 0.0;  // |(X, X) - 1|
};
ModeResiduals mode_residuals(const BlochProblem& problem, const BlochMode& mode);

// Largest principal angle between the spans of two weighted-orthonormal mode sets.
double subspace_angle(const std::vector<BlochMode>& a, const std::vector<BlochMode>& b,
                      const GalerkinTensor& P);

// Conjugate of a mode at xi as a mode on the mirrored fiber -xi + 2 pi s, where
// s_i = 1 on even axes (wavenumbers are reindexed k -> -k - s).
Vec3 mirrored_fiber(const GridShape& lattice, const Vec3& xi);
BlochMode conjugate_mode(const BlochMode& m);

struct SymmetryReport {
  bool applicable = true;
  bool passed = false;
  double eigenvalue_mismatch = 0.0;
  double max_angle = 0.0;
  double worst_lambda = 0.0;  // eigenspace attaining max_angle
  double worst_gap = 0.0;     // its distance to the nearest other eigenvalue
  int groups_checked = 0;
  std::string note;
};

SymmetryReport spectrum_symmetry_check(const BlochProblem& problem, const BlochSlice& slice,
                                       double angle_tol = 1e-8);

}  // namespace hommax
