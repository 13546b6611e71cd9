#pragma once

// Bloch modes and the weighted energy product on pairs (U, V):
//   ((U, V), (U', V')) = integral of Q^{-1}U . conj(U') + P V . conj(V').
// The discrete Q^{-1} is the inverse of the Galerkin matrix of Q, so every
// mode carries Q^{-1}Phi alongside Phi.

#include "hommax/material.hpp"

namespace hommax {

struct BlochMode {
  Vec3 xi = Vec3::Zero();
  double lambda = 0.0;
  PeriodicField Phi;      // U component (B-like)
  PeriodicField Psi;      // V component (E-like)
  PeriodicField QinvPhi;  // Q^{-1} U
  int band_index = 0;
  int slot = 0;
  int multiplicity = 1;
};

// Weighted product of two modes; P enters through its Galerkin operator.
inline cplx weighted_inner(const BlochMode& a, const BlochMode& b, const GalerkinTensor& P) {
  return cell_inner(a.QinvPhi, b.Phi) + cell_inner(P.apply(a.Psi), b.Psi);
}

}  // namespace hommax
