#include "hommax/periodic_field.hpp"

#include <fmt/format.h>

namespace hommax {

PeriodicField::PeriodicField(GridShape shape, int components)
    : shape_(shape), components_(components),
      coeffs_(VectorXc::Zero(static_cast<Eigen::Index>(components * shape.size()))) {
  if (components != 1 && components != 3) {
    throw InputError(fmt::format("PeriodicField: {} components not supported", components));
  }
  for (int a = 0; a < 3; ++a) {
    if (shape[a] < 1 || (shape[a] > 1 && shape[a] % 2 != 0)) {
      throw InputError(fmt::format("PeriodicField: axis {} resolution {} must be even or 1", a,
                                   shape[a]));
    }
  }
}

PeriodicField::PeriodicField(GridShape shape, int components, VectorXc coeffs)
    : PeriodicField(shape, components) {
  if (coeffs.size() != coeffs_.size()) throw InputError("PeriodicField: coefficient size mismatch");
  coeffs_ = std::move(coeffs);
}

Vec3c PeriodicField::vector_at(std::size_t idx) const {
  return {at(0, idx), at(1, idx), at(2, idx)};
}

void PeriodicField::set_vector(std::size_t idx, const Vec3c& v) {
  for (int c = 0; c < 3; ++c) at(c, idx) = v(c);
}

Vec3c PeriodicField::mean_vector() const {
  if (components_ != 3) throw InputError("mean_vector: scalar field");
  return vector_at(0);
}

std::vector<cplx> PeriodicField::sample(int comp, const GridShape& grid) const {
  for (int a = 0; a < 3; ++a) {
    if (grid[a] < shape_[a]) throw InputError("PeriodicField::sample: grid coarser than lattice");
  }
  std::vector<cplx> out(grid.size());
  const VectorXc block = component(comp);
  resample_coefficients(shape_, std::span<const cplx>(block.data(), block.size()), grid, out);
  fft_backward(grid, out);
  return out;
}

PeriodicField PeriodicField::from_samples(const GridShape& shape,
                                          std::span<const std::vector<cplx>> values) {
  PeriodicField f(shape, static_cast<int>(values.size()));
  for (int c = 0; c < f.components(); ++c) {
    std::vector<cplx> tmp = values[c];
    if (tmp.size() != shape.size()) throw InputError("from_samples: size mismatch");
    fft_forward(shape, tmp);
    for (std::size_t i = 0; i < shape.size(); ++i) f.at(c, i) = tmp[i];
  }
  return f;
}

bool PeriodicField::is_real(double tol) const {
  for (std::size_t i = 0; i < lattice_size(); ++i) {
    const auto k = shape_.wavenumbers(i);
    const std::array<int, 3> mk{-k[0], -k[1], -k[2]};
    if (!shape_.contains_wavenumber(mk)) continue;
    const std::size_t j = shape_.index_of_wavenumber(mk);
    for (int c = 0; c < components_; ++c) {
      if (std::abs(at(c, j) - std::conj(at(c, i))) > tol) return false;
    }
  }
  return true;
}

TrigPoly PeriodicField::to_trig() const {
  TrigPoly p(3, components_ == 1 ? ValueRank::scalar : ValueRank::vector3);
  for (std::size_t i = 0; i < lattice_size(); ++i) {
    const auto k = shape_.wavenumbers(i);
    const std::array<double, 3> f{kTwoPi * k[0], kTwoPi * k[1], kTwoPi * k[2]};
    Coeff c{at(0, i), 0.0, 0.0};
    if (components_ == 3) c = {at(0, i), at(1, i), at(2, i)};
    p.add_term(f, c);
  }
  return p;
}

PeriodicField PeriodicField::from_trig(const TrigPoly& u, const GridShape& shape) {
  if (u.dim() != 3) throw InputError("PeriodicField::from_trig: expected a 3-variable polynomial");
  PeriodicField f(shape, u.components());
  for (const auto& [key, c] : u.terms()) {
    const auto freq = u.frequency(key);
    std::array<int, 3> k{};
    for (int a = 0; a < 3; ++a) {
      const double kk = freq[a] / kTwoPi;
      k[a] = static_cast<int>(std::lround(kk));
      if (std::abs(kk - k[a]) > 1e-9) {
        throw InputError("PeriodicField::from_trig: frequency not on the lattice 2*pi*Z^3");
      }
    }
    if (!shape.contains_wavenumber(k)) {
      throw InputError(fmt::format("PeriodicField::from_trig: wavenumber ({},{},{}) exceeds the lattice",
                                   k[0], k[1], k[2]));
    }
    const std::size_t idx = shape.index_of_wavenumber(k);
    for (int comp = 0; comp < f.components(); ++comp) f.at(comp, idx) += c[comp];
  }
  return f;
}

nlohmann::json PeriodicField::to_json() const {
  nlohmann::json j;
  j["shape"] = shape_.n;
  j["components"] = components_;
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t i = 0; i < lattice_size(); ++i) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    bool nonzero = false;
    for (int c = 0; c < components_; ++c) {
      re.push_back(at(c, i).real());
      im.push_back(at(c, i).imag());
      nonzero = nonzero || std::abs(at(c, i)) >= kPruneThreshold;
    }
    if (!nonzero) continue;
    terms.push_back({{"k", shape_.wavenumbers(i)}, {"re", re}, {"im", im}});
  }
  j["coefficients"] = std::move(terms);
  return j;
}

PeriodicField PeriodicField::operator+(const PeriodicField& o) const {
  if (!(shape_ == o.shape_) || components_ != o.components_) {
    throw InputError("PeriodicField: shape mismatch");
  }
  return {shape_, components_, coeffs_ + o.coeffs_};
}

PeriodicField PeriodicField::operator-(const PeriodicField& o) const { return *this + o * -1.0; }

PeriodicField PeriodicField::operator*(cplx s) const { return {shape_, components_, coeffs_ * s}; }

Vec3 shifted_wavevector(const GridShape& shape, std::size_t idx, const Vec3& xi) {
  const auto k = shape.wavenumbers(idx);
  return {xi(0) + kTwoPi * k[0], xi(1) + kTwoPi * k[1], xi(2) + kTwoPi * k[2]};
}

PeriodicField shifted_gradient(const PeriodicField& scalar, const Vec3& xi) {
  if (scalar.components() != 1) throw InputError("shifted_gradient: scalar field expected");
  PeriodicField g(scalar.shape(), 3);
  for (std::size_t i = 0; i < scalar.lattice_size(); ++i) {
    const Vec3 w = shifted_wavevector(scalar.shape(), i, xi);
    for (int c = 0; c < 3; ++c) g.at(c, i) = kI * w(c) * scalar.at(0, i);
  }
  return g;
}

PeriodicField shifted_divergence(const PeriodicField& vec, const Vec3& xi) {
  if (vec.components() != 3) throw InputError("shifted_divergence: vector field expected");
  PeriodicField d(vec.shape(), 1);
  for (std::size_t i = 0; i < vec.lattice_size(); ++i) {
    const Vec3 w = shifted_wavevector(vec.shape(), i, xi);
    d.at(0, i) = kI * (w(0) * vec.at(0, i) + w(1) * vec.at(1, i) + w(2) * vec.at(2, i));
  }
  return d;
}

PeriodicField shifted_curl(const PeriodicField& vec, const Vec3& xi) {
  if (vec.components() != 3) throw InputError("shifted_curl: vector field expected");
  PeriodicField r(vec.shape(), 3);
  for (std::size_t i = 0; i < vec.lattice_size(); ++i) {
    const Vec3c w = shifted_wavevector(vec.shape(), i, xi).cast<cplx>();
    r.set_vector(i, kI * cross(w, vec.vector_at(i)));
  }
  return r;
}

cplx cell_inner(const PeriodicField& u, const PeriodicField& v) {
  if (!(u.shape() == v.shape()) || u.components() != v.components()) {
    throw InputError("cell_inner: shape mismatch");
  }
  return v.coeffs().dot(u.coeffs());  // sum u * conj(v)
}

}  // namespace hommax
