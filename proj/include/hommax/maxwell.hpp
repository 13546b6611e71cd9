#pragma once

// Reference solvers on the unit macroscopic torus.
//
// Fine scale:   d_t B + curl E = f,   P(x/eps) d_t E - curl(Q^{-1}(x/eps) B) = g.
// Homogenized:  d_t B + curl E = f,   P_H d_t E - curl(Q_H^{-1} B) = g,
//               B(0) = M_y(B0),  P_H E(0) = M_y(P E0).
//
// Fields are held as Fourier coefficients on an M-point grid. Curls and
// divergences are spectral with the Nyquist multiplier set to zero, so
// div curl = 0 exactly and real data stay real. Material tensors act
// pointwise on the grid. The energy is H = int Q^{-1} B . conj B + P E . conj E.

#include "hommax/transport.hpp"

#include <map>
#include <vector>

namespace hommax {

struct FieldState {
  double t = 0.0;
  PeriodicField B;
  PeriodicField E;
  int inv_eps = 1;

  const GridShape& grid() const { return B.shape(); }
};

// macro(x) * micro(x / eps) as a polynomial in x; throws InputError unless the
// result is periodic on the unit torus.
TrigPoly compose_two_scale(const TrigPoly& macro, const TrigPoly& micro, int inv_eps);

// B_eps(0, x) = B0(x, x/eps), E_eps(0, x) = E0(x, x/eps).
FieldState fine_initial_state(const TwoScaleField& B0, const TwoScaleField& E0, int inv_eps,
                              const GridShape& grid);

// Time-harmonic pieces of f_eps(t, x) = f(x, t/eps, x/eps): sum_w exp(i w t) field_w.
struct HarmonicField {
  std::vector<std::pair<double, PeriodicField>> parts;

  bool empty() const { return parts.empty(); }
  PeriodicField at(double t, const GridShape& grid) const;
};

HarmonicField fine_forcing(const ForcingField& terms, int inv_eps, const GridShape& grid);

// Spectral operators on the macroscopic grid (Nyquist multiplier zeroed).
PeriodicField spectral_curl(const PeriodicField& v);
PeriodicField spectral_divergence(const PeriodicField& v);

// Pointwise material tensors A(x * inv_eps) sampled on a grid.
class PointwiseTensor {
 public:
  PointwiseTensor(const MaterialTensor& material, int inv_eps, const GridShape& grid, bool inverse);
  PeriodicField apply(const PeriodicField& v) const;

 private:
  GridShape grid_;
  std::vector<Mat3c> values_;
  bool constant_ = false;  // multiply coefficients directly
};

struct EnergyReport {
  std::vector<double> t;
  std::vector<double> H;
  std::vector<double> divB;
  std::vector<double> divPE_minus_rho;
  std::vector<double> work;  // time integral of 2 Re int(Q^{-1} f . conj B + g . conj E)

  double relative_drift() const;    // max_n |H_n - H_0| / H_0
  double balance_defect() const;    // max_n |H_n - H_0 - work_n| / H_0
};

struct FineSolveOptions {
  double dt = 1e-3;        // upper bound; each output interval is split evenly
  double rtol = 1e-11;     // Krylov tolerance per step
  int max_iterations = 500;
};

struct FineTrajectory {
  std::vector<FieldState> states;  // at the requested nodes
  EnergyReport energy;
  double dt_used = 0.0;
  int total_iterations = 0;
  std::vector<std::string> warnings;
};

class FineSolver {
 public:
  FineSolver(const MaterialTensor& P, const MaterialTensor& Q, int inv_eps, const GridShape& grid);

  const GridShape& grid() const { return grid_; }
  int inv_eps() const { return inv_eps_; }

  double energy(const FieldState& s) const;
  // 2 Re int (Q^{-1} f . conj B + g . conj E)
  double power(const PeriodicField& f, const PeriodicField& g, const FieldState& s) const;

  // One implicit-midpoint step of size h; returns Krylov iterations.
  int step(FieldState& s, double h, const HarmonicField& f, const HarmonicField& g, double rtol,
           int max_iterations) const;

  FineTrajectory solve(const FieldState& init, const HarmonicField& f, const HarmonicField& g,
                       const std::vector<double>& times, const FineSolveOptions& opts) const;

  // ||div B|| and ||div(P E) - rho||.
  std::pair<double, double> divergence_norms(const FieldState& s, const PeriodicField& rho) const;
  PeriodicField apply_P(const PeriodicField& E) const { return P_.apply(E); }
  PeriodicField charge(const FieldState& s) const { return spectral_divergence(P_.apply(s.E)); }

 private:
  // W-weighted stacking of (B, E).
  VectorXc stack(const PeriodicField& B, const PeriodicField& E) const;
  std::pair<PeriodicField, PeriodicField> unstack(const VectorXc& x) const;
  VectorXc generator(const VectorXc& x) const;  // (-curl E, P^{-1} curl Q^{-1} B)
  VectorXc weight(const VectorXc& x) const;     // (Q^{-1} B, P E)

  GridShape grid_;
  int inv_eps_;
  PointwiseTensor P_, Pinv_, Qinv_;
};

struct DivergenceReport {
  double divB = 0.0;
  double divPE_minus_rho = 0.0;
  double reference = 0.0;  // max|w| * field norm
  bool passed = false;
};

// Relative spectral divergence check of a state against a charge (1e-8).
DivergenceReport validate_divergence(const FineSolver& solver, const FieldState& s, const PeriodicField& rho);

// Homogenized system in Fourier variables: per kappa the 6-vector (B, E).
struct HomogenizedData {
  std::map<Wavevector, std::pair<Vec3c, Vec3c>> modes;  // (B, E) per kappa
};

// Weak-limit data: B(0) = M_y(B0), E(0) = P_H^{-1} M_y(P E0).
HomogenizedData homogenized_initial_data(const TwoScaleField& B0, const TwoScaleField& E0,
                                         const GalerkinTensor& P, const Mat3c& PH);

// Weak limits M_sy of the forcing profiles per kappa.
HomogenizedData homogenized_forcing(const ForcingField& f, const ForcingField& g);

struct HomogenizedTrajectory {
  std::vector<double> times;
  std::map<Wavevector, std::vector<std::pair<Vec3c, Vec3c>>> values;

  FieldState state(std::size_t node, const GridShape& grid) const;
  double energy(std::size_t node, const Mat3c& PH, const Mat3c& QH) const;
};

// 6x6 generator for (B, E) at kappa: d/dt (B, E) = G (B, E) + (f, P_H^{-1} g).
MatrixXc homogenized_generator(const Mat3c& PH, const Mat3c& QH, const Wavevector& kappa);

HomogenizedTrajectory homogenized_solve(const Mat3c& PH, const Mat3c& QH, const HomogenizedData& init,
                                        const HomogenizedData& forcing, const std::vector<double>& times);

}  // namespace hommax
