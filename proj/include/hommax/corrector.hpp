#pragma once

// Two-scale reconstruction, the classical elliptic corrector and the error
// and energy metrics of an eps-sweep against the fine solver.
//
// Cell fields are placed spectrally on the fine grid: a cell coefficient at
// lattice vector k of a mode with quasimomentum xi, carried by the macro
// wavevector kappa, lands on the fine wavenumber kappa + (k + xi / 2 pi) / eps.
// This equals sampling at x / eps on an aligned grid, without interpolation.

#include "hommax/cell.hpp"
#include "hommax/maxwell.hpp"

#include <optional>
#include <string>

namespace hommax {

struct TwoScaleAnsatz {
  std::vector<double> times;
  std::vector<AmplitudeSystem> systems;
  std::vector<AmplitudeSolution> solutions;
  double tail_fraction = 0.0;   // share of the data energy outside the retained modes
  double lambda_max = 0.0;      // largest |lambda| among retained eigenspaces

  // sum over eigenspaces and kappa of |a|^2 (the two-scale energy).
  double energy(std::size_t node) const;
  // Largest |lambda| whose amplitudes carry more than rel of the energy at t = 0,
  // and at least the smallest nonzero |lambda| retained.
  double effective_lambda(double rel = 1e-12) const;
};

// Solves the amplitude systems of every eigenspace retained by `sel` on each
// quasimomentum present in the data.
TwoScaleAnsatz build_ansatz(const BlochProblem& problem, const TwoScaleField& B0, const TwoScaleField& E0,
                            const ForcingField& f, const ForcingField& g, const ModeSelection& sel,
                            const std::vector<double>& times);

// Adds c * exp(i kappa . x) * cell(x / eps) * exp(i xi . x / eps) to `out`.
void add_modulated(PeriodicField& out, const PeriodicField& cell, const Vec3& xi, int inv_eps,
                   const Wavevector& kappa, cplx c);

// (B, E)(x) = sum a_l(t, x) exp(i (lambda t / eps + xi . x / eps)) (Phi_l, Psi_l)(x / eps).
std::pair<PeriodicField, PeriodicField> reconstruct_two_scale(const TwoScaleAnsatz& ansatz, int inv_eps,
                                                              std::size_t node, const GridShape& grid);

// Cell fields of the classical corrector: B_i = Q (e_i + grad W_i), E_i = e_i + grad Z_i.
struct ClassicalCellFields {
  Mat3c PH, QH;
  std::array<PeriodicField, 3> B;
  std::array<PeriodicField, 3> E;
};
ClassicalCellFields classical_cell_fields(const GalerkinTensor& P, const GalerkinTensor& Q);

// B = sum_i (Q_H^{-1} B_H)_i B_i(x / eps),  E = sum_i (E_H)_i E_i(x / eps).
std::pair<PeriodicField, PeriodicField> classical_corrector(const HomogenizedTrajectory& hom, std::size_t node,
                                                            const ClassicalCellFields& cells, int inv_eps,
                                                            const GridShape& grid);

// Relative L2 distance |a - b| / |b|, optionally weighted by a pointwise tensor.
double l2_error(const PeriodicField& a, const PeriodicField& b, const PointwiseTensor* weight = nullptr);

// Relative L2((0, T) x torus) distance of two snapshot series (trapezoid in time).
double l2_error(const std::vector<PeriodicField>& a, const std::vector<PeriodicField>& b,
                const std::vector<double>& times);

// Keeps the coefficients with |2 pi k| <= cutoff.
PeriodicField low_pass(const PeriodicField& f, double cutoff);

struct EnergyConvergence {
  double fine = 0.0;       // time integral of the fine energy
  double two_scale = 0.0;  // time integral of the amplitude energy
  double gap = 0.0;        // |fine - two_scale| / two_scale
};
EnergyConvergence energy_convergence_metric(const FineTrajectory& fine, const TwoScaleAnsatz& ansatz);

double trapezoid(const std::vector<double>& t, const std::vector<double>& v);

struct StudyConfig {
  MaterialTensor P = MaterialTensor::identity();
  MaterialTensor Q = MaterialTensor::laminate();
  GridShape cell{16, 1, 1};
  GridShape fine{256, 1, 1};
  std::vector<int> inv_eps{2, 4, 8};
  TwoScaleField B0, E0;
  ForcingField f, g;
  double T = 1.0;
  int nodes = 21;
  double dt_factor = 100.0;          // dt = eps / (dt_factor * Lambda_eff)
  std::optional<double> dt;          // overrides the rule
  ModeSelection selection = ModeSelection::all();
  double low_pass_cutoff = 4.0 * kPi;
  double krylov_rtol = 1e-11;
  int threads = 1;                   // eps values run concurrently
};

struct StudyRow {
  int inv_eps = 1;
  double err_two_scale_B = 0.0;
  double err_two_scale_E = 0.0;
  double err_classical_B = 0.0;
  double err_classical_E = 0.0;
  double energy_gap = 0.0;
  double tail_fraction = 0.0;
  double err_weak_limit = 0.0;  // low-pass fine vs homogenized, hypot of the B and E errors
  double energy_drift = 0.0;
  double dt = 0.0;
  double seconds = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double lambda_eff = 0.0;
  std::vector<std::string> warnings;
};

StudyResult corrector_study(const StudyConfig& cfg);

// Laminate study data: macro envelopes b = exp(cos 2 pi x1), e = exp(sin 2 pi x1) / 2
// truncated to their numerically nonzero Fourier modes.
TrigPoly envelope_b();
TrigPoly envelope_e();
// B0 = e3 b q(y) / 2 with q = 2 + cos 2 pi y1,  E0 = e2 e: aligned with the kernel.
std::pair<TwoScaleField, TwoScaleField> well_prepared_laminate_data();
// Well-prepared data plus oscillating cell profiles with a constant envelope:
// B0 += 0.3 e3 sin 2 pi y1,  E0 += 0.25 e2 cos 4 pi y1. These have no kernel
// component, so the solution oscillates in time at rates lambda / eps.
std::pair<TwoScaleField, TwoScaleField> generic_laminate_data();

}  // namespace hommax
