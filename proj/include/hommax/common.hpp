#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hommax {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Bilinear cross product. Eigen's cross() conjugates complex results.
inline Vec3c cross(const Vec3c& a, const Vec3c& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0)};
}

// Bad user input: malformed files, inconsistent shapes, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure did not reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Material tensor fails the Hermiticity or ellipticity gate.
class MaterialError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace hommax
