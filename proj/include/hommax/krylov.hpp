#pragma once

// Preconditioned conjugate gradients for Hermitian positive definite
// operators given as callables on Eigen vectors. The inner product is
// <x, y> = y^H W x with W supplied by `weight` (identity when omitted), so the
// operator need only be self-adjoint in that product.

#include "hommax/common.hpp"

#include <functional>

namespace hommax {

struct CgResult {
  VectorXc x;
  double relative_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

using LinearMap = std::function<VectorXc(const VectorXc&)>;

inline CgResult conjugate_gradient(const LinearMap& apply, const VectorXc& rhs, VectorXc x0,
                                   double rtol, int max_iter, const LinearMap& precond = {},
                                   const LinearMap& weight = {}) {
  auto w = [&](const VectorXc& v) { return weight ? weight(v) : v; };
  auto inner = [&](const VectorXc& a, const VectorXc& b) { return w(b).dot(a); };
  auto m = [&](const VectorXc& v) { return precond ? precond(v) : v; };

  CgResult res;
  res.x = std::move(x0);
  const double bnorm = std::sqrt(std::abs(inner(rhs, rhs)));
  if (bnorm == 0.0) {
    res.x.setZero();
    res.converged = true;
    return res;
  }
  VectorXc r = rhs - apply(res.x);
  double rnorm = std::sqrt(std::abs(inner(r, r)));
  VectorXc z = m(r);
  VectorXc p = z;
  cplx rz = inner(z, r);
  while (rnorm > rtol * bnorm && res.iterations < max_iter) {
    const VectorXc ap = apply(p);
    const cplx step = rz / inner(ap, p);
    res.x += step * p;
    r -= step * ap;
    rnorm = std::sqrt(std::abs(inner(r, r)));
    ++res.iterations;
    z = m(r);
    const cplx rz_new = inner(z, r);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  res.relative_residual = rnorm / bnorm;
  res.converged = rnorm <= rtol * bnorm;
  return res;
}

}  // namespace hommax
