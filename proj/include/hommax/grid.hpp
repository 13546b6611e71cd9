#pragma once

// Tensor-product grids on the unit torus and their Fourier lattices.
//
// An axis of size n carries the wavenumbers k in {-n/2, ..., n/2 - 1} (just
// {0} when n = 1), stored in FFT order. Physical frequencies are 2*pi*k.

#include "hommax/common.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace hommax {

struct GridShape {
  std::array<int, 3> n{1, 1, 1};

  GridShape() = default;
  GridShape(int n1, int n2, int n3) : n{n1, n2, n3} {}
  static GridShape cube(int m) { return {m, m, m}; }

  std::size_t size() const {
    return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
           static_cast<std::size_t>(n[2]);
  }
  int operator[](int axis) const { return n[axis]; }
  bool operator==(const GridShape&) const = default;

  // Row-major flat index, axis 0 slowest.
  std::size_t flat(int i0, int i1, int i2) const {
    return (static_cast<std::size_t>(i0) * n[1] + i1) * n[2] + i2;
  }
  std::array<int, 3> unflat(std::size_t idx) const {
    const int i2 = static_cast<int>(idx % n[2]);
    idx /= n[2];
    const int i1 = static_cast<int>(idx % n[1]);
    return {static_cast<int>(idx / n[1]), i1, i2};
  }

  // Wavenumber of FFT-ordered index j on an axis of size m.
  static int wavenumber(int j, int m) { return j < (m + 1) / 2 ? j : j - m; }
  // FFT-ordered slot of wavenumber k on an axis of size m (k must be representable).
  static int slot(int k, int m) { return ((k % m) + m) % m; }
  static bool representable(int k, int m) { return k >= -(m / 2) && k <= (m - 1) / 2; }

  std::array<int, 3> wavenumbers(std::size_t idx) const {
    const auto j = unflat(idx);
    return {wavenumber(j[0], n[0]), wavenumber(j[1], n[1]), wavenumber(j[2], n[2])};
  }
  bool contains_wavenumber(const std::array<int, 3>& k) const {
    return representable(k[0], n[0]) && representable(k[1], n[1]) && representable(k[2], n[2]);
  }
  std::size_t index_of_wavenumber(const std::array<int, 3>& k) const {
    return flat(slot(k[0], n[0]), slot(k[1], n[1]), slot(k[2], n[2]));
  }

  // Grid point coordinates y_j = j / n.
  Vec3 point(std::size_t idx) const {
    const auto j = unflat(idx);
    return {static_cast<double>(j[0]) / n[0], static_cast<double>(j[1]) / n[1],
            static_cast<double>(j[2]) / n[2]};
  }

  // Axis-wise doubling (size-1 axes stay 1); the dealiasing grid for quadratic products.
  GridShape padded() const {
    return {n[0] > 1 ? 2 * n[0] : 1, n[1] > 1 ? 2 * n[1] : 1, n[2] > 1 ? 2 * n[2] : 1};
  }
};

// Normalized 3-D FFT on a grid: forward maps point values to Fourier
// coefficients (divides by the point count), backward evaluates the
// trigonometric polynomial at the grid points. Thread-safe.
void fft_forward(const GridShape& shape, std::span<cplx> data);
void fft_backward(const GridShape& shape, std::span<cplx> data);

// Copies Fourier coefficients between lattices of different size: wavenumbers
// present in both are kept, the rest are zero-filled or dropped.
void resample_coefficients(const GridShape& from, std::span<const cplx> src, const GridShape& to,
                           std::span<cplx> dst);

}  // namespace hommax
