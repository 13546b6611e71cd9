#pragma once

// Periodic cell problems  -div(A(eta + grad W)) = 0  and homogenized tensors.

#include "hommax/mode.hpp"

#include <vector>

namespace hommax {

struct CellSolveOptions {
  double rtol = 1e-10;
  int max_iterations = 0;  // 0: 10 * lattice size
};

struct CellCorrector {
  PeriodicField potential;  // W, scalar, mean zero
  double residual = 0.0;    // |div(A(eta + grad W))| / |A eta| on the lattice
  int iterations = 0;
};

CellCorrector solve_cell_corrector(const GalerkinTensor& A, const Vec3c& eta,
                                   const CellSolveOptions& opts = {});

// eta + grad W as a vector field on the lattice.
PeriodicField corrected_field(const CellCorrector& c, const Vec3c& eta);

struct Homogenization {
  Mat3c tensor;                          // column i: mean of A(e_i + grad W_i)
  Mat3c energy_tensor;                   // (i, j): integral of A(e_j + grad W_j) . conj(e_i + grad W_i)
  std::array<CellCorrector, 3> correctors;
  double hermiticity_defect = 0.0;
  double min_eigenvalue = 0.0;
};

Homogenization homogenized_tensor(const GalerkinTensor& A, const CellSolveOptions& opts = {});

// Six xi = 0, lambda = 0 modes: (Q(e_i + grad W_i), 0) and (0, e_i + grad Z_i),
// orthonormalized in the weighted product.
std::vector<BlochMode> kernel_basis(const GalerkinTensor& P, const GalerkinTensor& Q,
                                    const Homogenization& hp, const Homogenization& hq);

}  // namespace hommax
