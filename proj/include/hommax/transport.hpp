#pragma once

// Amplitude transport for one Bloch eigenspace (xi, j) of multiplicity m.
//
// Coefficients, with A = Q^{-1} Phi:
//   b_lq = -i * integral over the cell of (Psi_q x conj(A_l) - A_q x conj(Psi_l))
// so that b_lq = -conj(b_ql). On the macroscopic torus the amplitudes obey
//   d a / dt = (b . kappa) a + f   per wavevector kappa in 2 pi Z^3,
// i.e.  d_t a + i b . grad_x a = f, and b . kappa is skew-Hermitian. For
// m = 1 the amplitude is advected with velocity i b_11.

#include "hommax/bloch.hpp"

#include <map>

namespace hommax {

using Wavevector = std::array<int, 3>;  // kappa = 2 pi * Wavevector

// Separable two-scale field: sum over terms of macro(x) * micro(y).
// macro: scalar, dim 3, frequencies in 2 pi Z^3. micro: vector, dim 3.
struct TwoScaleTerm {
  TrigPoly macro;
  TrigPoly micro;
};
using TwoScaleField = std::vector<TwoScaleTerm>;

// Forcing: macro(x) * micro(s, y); macro may be given with a time variable
// (dim 4, ordered t, x) only if it carries no time frequency.
struct ForcingTerm {
  TrigPoly macro;
  TrigPoly micro;
};
using ForcingField = std::vector<ForcingTerm>;

using BCoefficients = std::vector<std::vector<Vec3c>>;  // b[l][q]

BCoefficients transport_coefficients(const std::vector<BlochMode>& group);
double skew_defect(const BCoefficients& b);  // max |b_lq + conj(b_ql)|

// Macroscopic Fourier coefficients of a scalar macro profile.
std::map<Wavevector, cplx> macro_coefficients(const TrigPoly& macro);

// Fails with InputError unless div_y micro = 0 and div_y(P micro) = 0 for the
// respective terms (relative 1e-8 on the cell lattice).
void validate_two_scale_divergence(const TwoScaleField& B0, const TwoScaleField& E0, const GalerkinTensor& P);

using AmplitudeMap = std::map<Wavevector, VectorXc>;

// alpha_l(kappa) = (T_xi data, mode_l) in the weighted product.
AmplitudeMap project_initial_data(const TwoScaleField& B0, const TwoScaleField& E0,
                                  const std::vector<BlochMode>& group, const GalerkinTensor& P);

// f_l(kappa) = M_sy of exp(-i(lambda s + xi.y)) (Q^{-1} f . conj Phi_l + g . conj Psi_l).
AmplitudeMap project_forcing(const ForcingField& f, const ForcingField& g,
                             const std::vector<BlochMode>& group);

// Weighted norm^2 of the data part with quasimomentum xi, summed over kappa.
double data_energy(const TwoScaleField& B0, const TwoScaleField& E0, const Vec3& xi,
                   const BlochProblem& problem);

struct AmplitudeSystem {
  Vec3 xi = Vec3::Zero();
  int band_index = 0;
  double lambda = 0.0;
  std::vector<BlochMode> modes;
  BCoefficients b;
  AmplitudeMap a0;
  AmplitudeMap forcing;
  int multiplicity() const { return static_cast<int>(modes.size()); }
};

AmplitudeSystem build_amplitude_system(std::vector<BlochMode> group, const TwoScaleField& B0,
                                       const TwoScaleField& E0, const ForcingField& f,
                                       const ForcingField& g, const GalerkinTensor& P);

// Generator b . kappa (skew-Hermitian).
MatrixXc transport_generator(const BCoefficients& b, const Wavevector& kappa);

struct AmplitudeSolution {
  std::vector<double> times;
  std::map<Wavevector, std::vector<VectorXc>> values;  // per kappa, per time node
};

// Exact Duhamel solution on `times` for constant forcing.
AmplitudeSolution solve_amplitude_system(const AmplitudeSystem& sys, const std::vector<double>& times);

// Evaluates the solution for one kappa at time t.
VectorXc amplitude_at(const MatrixXc& generator, const VectorXc& a0, const VectorXc& f, double t);

std::vector<double> uniform_nodes(double T, int nt);

}  // namespace hommax
