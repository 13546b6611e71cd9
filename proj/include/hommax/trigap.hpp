#pragma once

// Exact algebra on trigonometric polynomials
//
//   u(z) = sum_f a_f exp(i f.z),   z in R^d, d in {1, 3, 4}
//
// with finitely many real frequency vectors f. For d = 4 the variables are
// ordered (s, y1, y2, y3): s is the fast time, y the fast space variable.
// Coefficients are complex scalars or complex 3-vectors.
//
// Frequencies are canonicalized on a 1e-12 grid and keys one quantum apart
// are merged; coefficients whose modulus falls below 1e-14 are dropped. The
// zero polynomial has no terms.
//
// The unit cell is [0,1)^3, so lattice-periodic functions carry frequencies
// in 2*pi*Z^3 and the reduced zone of quasimomenta is [-pi, pi)^3.

#include "hommax/common.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace hommax {

enum class ValueRank { scalar, vector3 };

enum class Contraction {
  scale,  // scalar * scalar, scalar * vector, vector * scalar
  dot,    // vector . vector (bilinear, no conjugation)
  cross,  // vector x vector
};

inline constexpr double kFrequencyQuantum = 1e-12;
inline constexpr double kPruneThreshold = 1e-14;

using FreqKey = std::array<std::int64_t, 4>;
using Coeff = std::array<cplx, 3>;

class TrigPoly {
 public:
  TrigPoly(int dim, ValueRank rank);

  static TrigPoly constant(int dim, cplx value);
  static TrigPoly constant(int dim, const Vec3c& value);
  static TrigPoly monomial(int dim, std::span<const double> freq, cplx c);
  static TrigPoly monomial(int dim, std::span<const double> freq, const Vec3c& c);

  // Accumulates c into the coefficient at freq; prunes the result.
  void add_term(std::span<const double> freq, const Coeff& c);
  void add_term(std::span<const double> freq, cplx c) { add_term(freq, Coeff{c, 0.0, 0.0}); }

  int dim() const { return dim_; }
  ValueRank rank() const { return rank_; }
  int components() const { return rank_ == ValueRank::scalar ? 1 : 3; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  const std::map<FreqKey, Coeff>& terms() const { return terms_; }
  std::vector<double> frequency(const FreqKey& key) const;
  FreqKey key(std::span<const double> freq) const;

  // Coefficient at freq (zero if absent).
  Coeff coefficient(std::span<const double> freq) const;

  // Value at a point of R^dim.
  Coeff evaluate(std::span<const double> point) const;

  // Largest |f_axis| over all terms.
  double max_frequency(int axis) const;

  TrigPoly operator+(const TrigPoly& other) const;
  TrigPoly operator-(const TrigPoly& other) const;
  TrigPoly operator*(cplx s) const;
  TrigPoly conj() const;  // pointwise complex conjugate: frequencies negate
  TrigPoly component(int c) const;

  // Multiplies every term by exp(i shift.z) (frequency translation).
  TrigPoly shifted(std::span<const double> shift) const;

  nlohmann::json to_json() const;
  static TrigPoly from_json(const nlohmann::json& j, int dim);

 private:
  void check_freq(std::span<const double> freq) const;

  int dim_;
  ValueRank rank_;
  std::map<FreqKey, Coeff> terms_;
};

TrigPoly vector_from_components(const TrigPoly& x, const TrigPoly& y, const TrigPoly& z);

// Frequency-domain convolution.
TrigPoly trig_product(const TrigPoly& u, const TrigPoly& v,
                      Contraction mode = Contraction::scale);

// (A v)_i = sum_j A_ij v_j with A given as 9 scalar polynomials in row-major order.
TrigPoly apply_tensor(const std::array<TrigPoly, 9>& a, const TrigPoly& v);

// Keeps the terms whose frequency vanishes on every selected axis.
// With dim 4: axes {0} is M_s, {1,2,3} is M_y, {0,1,2,3} is M_sy.
TrigPoly mean_value(const TrigPoly& u, std::span<const int> axes);

// Full mean M(u) = a_0.
Coeff mean(const TrigPoly& u);

TrigPoly partial_derivative(const TrigPoly& u, int axis);

// Spatial divergence of a vector polynomial; spatial axes are all axes for
// dim 1 or 3 and axes 1..3 for dim 4.
TrigPoly divergence(const TrigPoly& u);

// Index of the first spatial axis (1 when the variables are (s, y)).
int spatial_offset(int dim);
int spatial_dim(int dim);

// Reduced zone representative of a spatial frequency vector, each component in [-pi, pi).
std::vector<double> reduced_zone_class(std::span<const double> spatial_freq);

bool in_reduced_zone(std::span<const double> xi);

// Gelfand transform T_xi: terms whose spatial frequency is congruent to xi
// modulo 2*pi*Z^d, shifted back to lattice frequencies. The time variable of a
// dim-4 polynomial is carried along unchanged.
TrigPoly gelfand_transform(const TrigPoly& u, std::span<const double> xi);

// Distinct reduced-zone classes present in u, sorted.
std::vector<std::vector<double>> quasimomenta(const TrigPoly& u);

// True when every spatial frequency lies on the lattice 2*pi*Z^d.
bool is_lattice_periodic(const TrigPoly& u);

// sum_f a_f . conj(b_f) w_m(f), w_m = (1+|f|)^(2m) for m >= 0, |f|^(2m) for m < 0
// (the zero frequency is skipped when m < 0).
cplx besicovitch_inner(const TrigPoly& u, const TrigPoly& v, int weight_m = 0);

// Coefficient-wise comparison: frequencies matched within 1e-10, |a_f - b_f| <= tol.
bool approx_equal(const TrigPoly& u, const TrigPoly& v, double tol);

}  // namespace hommax
