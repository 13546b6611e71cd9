#pragma once

// Hermitian 3x3 tensor fields on the unit cell (permittivity-like P,
// permeability-like Q) and their Fourier-Galerkin operators.

#include "hommax/periodic_field.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>

namespace hommax {

class MaterialTensor {
 public:
  using Evaluator = std::function<Mat3c(const Vec3&)>;

  // Validates Hermiticity (1e-12) and positivity on a probe grid; throws MaterialError.
  MaterialTensor(std::string name, Evaluator eval, std::array<bool, 3> varies);

  static MaterialTensor identity(double scale = 1.0);
  // (a + b cos 2 pi y_axis) * I
  static MaterialTensor laminate(double a = 2.0, double b = 1.0, int axis = 0);
  // (a0 + sum_i b_i cos 2 pi y_i) * I
  static MaterialTensor separable_trig(double a0, const Vec3& b);
  // sum_k C_k exp(2 pi i k.y); the caller supplies the Hermitian-symmetric set.
  static MaterialTensor fourier(std::vector<std::pair<std::array<int, 3>, Mat3c>> terms);
  static MaterialTensor from_json(const nlohmann::json& j);

  Mat3c operator()(const Vec3& y) const { return eval_(y); }
  const std::string& name() const { return name_; }
  double alpha() const { return alpha_; }
  bool is_real() const { return real_; }
  bool is_constant() const { return !varies_[0] && !varies_[1] && !varies_[2]; }
  const std::array<bool, 3>& varies() const { return varies_; }

  // Hermiticity defect and smallest eigenvalue over the points of `grid`.
  struct GateReport {
    double hermiticity_defect = 0.0;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
  };
  GateReport inspect(const GridShape& grid) const;

  // Entry (a, b) as a dim-3 TrigPoly from its samples on `grid` (exact for
  // trigonometric tensors whose frequencies the grid resolves).
  std::array<TrigPoly, 9> as_trig(const GridShape& grid) const;

  // Throws InputError unless each axis along which the tensor varies is resolved (> 1 point).
  void require_resolved(const GridShape& grid) const;

 private:
  std::string name_;
  Evaluator eval_;
  std::array<bool, 3> varies_;
  double alpha_ = 0.0;
  bool real_ = true;
};

// Fourier-Galerkin multiplication v -> Pi_N (A v) on a truncated lattice,
// computed exactly with twofold zero padding. Equal to the dense block
// Toeplitz matrix with entries c_ab(k - k') from the padded-grid DFT of A.
class GalerkinTensor {
 public:
  GalerkinTensor(const MaterialTensor& material, GridShape lattice);

  const GridShape& lattice() const { return lattice_; }
  const MaterialTensor& material() const { return material_; }

  PeriodicField apply(const PeriodicField& v) const;
  // Dense 3n x 3n matrix in the component-major ordering of PeriodicField.
  MatrixXc dense() const;

 private:
  MaterialTensor material_;
  GridShape lattice_;
  GridShape padded_;
  std::array<std::vector<cplx>, 9> samples_;  // A_ab on the padded grid
};

}  // namespace hommax
