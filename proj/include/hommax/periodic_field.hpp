#pragma once

// Periodic fields on the unit cell held as plane-wave coefficients.
//
// A field of `components` complex entries per lattice point stores its
// coefficients component-major: coeffs[c * size + idx], idx in FFT order on
// the lattice of `shape`. Frequencies are 2*pi*k.
//
// Differential operators take a quasimomentum shift xi and act as the
// multiplier i(xi + 2*pi*k).

#include "hommax/grid.hpp"
#include "hommax/trigap.hpp"

#include <nlohmann/json.hpp>

namespace hommax {

class PeriodicField {
 public:
  PeriodicField() = default;
  PeriodicField(GridShape shape, int components);
  PeriodicField(GridShape shape, int components, VectorXc coeffs);

  const GridShape& shape() const { return shape_; }
  int components() const { return components_; }
  std::size_t lattice_size() const { return shape_.size(); }

  const VectorXc& coeffs() const { return coeffs_; }
  VectorXc& coeffs() { return coeffs_; }

  cplx& at(int comp, std::size_t idx) { return coeffs_(comp * lattice_size() + idx); }
  cplx at(int comp, std::size_t idx) const { return coeffs_(comp * lattice_size() + idx); }
  Vec3c vector_at(std::size_t idx) const;
  void set_vector(std::size_t idx, const Vec3c& v);

  // Coefficient block of one component.
  auto component(int comp) const { return coeffs_.segment(comp * lattice_size(), lattice_size()); }
  auto component(int comp) { return coeffs_.segment(comp * lattice_size(), lattice_size()); }

  Vec3c mean_vector() const;
  cplx mean_scalar() const { return at(0, 0); }

  // Values at the points of `grid` (a lattice at least as fine in each axis).
  std::vector<cplx> sample(int comp, const GridShape& grid) const;
  // Inverse of sample on the field's own grid.
  static PeriodicField from_samples(const GridShape& shape, std::span<const std::vector<cplx>> values);

  // True when c(-k) = conj(c(k)) for every k whose negative is on the lattice.
  bool is_real(double tol) const;

  // Lattice-periodic TrigPoly with the same coefficients (dim 3).
  TrigPoly to_trig() const;
  static PeriodicField from_trig(const TrigPoly& u, const GridShape& shape);

  nlohmann::json to_json() const;

  PeriodicField operator+(const PeriodicField& o) const;
  PeriodicField operator-(const PeriodicField& o) const;
  PeriodicField operator*(cplx s) const;

 private:
  GridShape shape_;
  int components_ = 1;
  VectorXc coeffs_;
};

// Multiplier xi + 2*pi*k at a lattice index.
Vec3 shifted_wavevector(const GridShape& shape, std::size_t idx, const Vec3& xi);

PeriodicField shifted_gradient(const PeriodicField& scalar, const Vec3& xi);
PeriodicField shifted_divergence(const PeriodicField& vec, const Vec3& xi);
PeriodicField shifted_curl(const PeriodicField& vec, const Vec3& xi);

// Discrete cell integral of u . conj(v) (Parseval on coefficients).
cplx cell_inner(const PeriodicField& u, const PeriodicField& v);

}  // namespace hommax
