#include "hommax/material.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

namespace hommax {

namespace {

constexpr int kProbePoints = 32;

GridShape probe_grid(const std::array<bool, 3>& varies) {
  return {varies[0] ? kProbePoints : 1, varies[1] ? kProbePoints : 1, varies[2] ? kProbePoints : 1};
}

Mat3c matrix_from_json(const nlohmann::json& re, const nlohmann::json* im) {
  Mat3c m = Mat3c::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      m(a, b) = cplx(re.at(a).at(b).get<double>(), im ? im->at(a).at(b).get<double>() : 0.0);
    }
  }
  return m;
}

}  // namespace

MaterialTensor::MaterialTensor(std::string name, Evaluator eval, std::array<bool, 3> varies)
    : name_(std::move(name)), eval_(std::move(eval)), varies_(varies) {
  const GridShape grid = probe_grid(varies_);
  const GateReport gate = inspect(grid);
  if (gate.hermiticity_defect > 1e-12) {
    throw MaterialError(fmt::format("material '{}': not Hermitian (defect {:.3e})", name_,
                                    gate.hermiticity_defect));
  }
  if (!(gate.min_eigenvalue > 0.0)) {
    throw MaterialError(fmt::format("material '{}': not elliptic (min eigenvalue {:.3e})", name_,
                                    gate.min_eigenvalue));
  }
  alpha_ = gate.min_eigenvalue;
  for (std::size_t i = 0; i < grid.size() && real_; ++i) {
    real_ = eval_(grid.point(i)).imag().cwiseAbs().maxCoeff() <= 1e-14;
  }
}

MaterialTensor::GateReport MaterialTensor::inspect(const GridShape& grid) const {
  GateReport r{0.0, std::numeric_limits<double>::infinity(), 0.0};
  Eigen::SelfAdjointEigenSolver<Mat3c> es;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Mat3c a = eval_(grid.point(i));
    r.hermiticity_defect = std::max(r.hermiticity_defect, (a - a.adjoint()).cwiseAbs().maxCoeff());
    es.compute(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
    r.min_eigenvalue = std::min(r.min_eigenvalue, es.eigenvalues()(0));
    r.max_eigenvalue = std::max(r.max_eigenvalue, es.eigenvalues()(2));
  }
  return r;
}

MaterialTensor MaterialTensor::identity(double scale) {
  return {fmt::format("identity({})", scale), [scale](const Vec3&) -> Mat3c {
            return scale * Mat3c::Identity();
          },
          {false, false, false}};
}

MaterialTensor MaterialTensor::laminate(double a, double b, int axis) {
  if (axis < 0 || axis > 2) throw InputError("laminate: axis must be 0, 1 or 2");
  std::array<bool, 3> varies{false, false, false};
  varies[axis] = b != 0.0;
  return {fmt::format("laminate({}+{}cos,axis {})", a, b, axis),
          [a, b, axis](const Vec3& y) -> Mat3c {
            return (a + b * std::cos(kTwoPi * y(axis))) * Mat3c::Identity();
          },
          varies};
}

MaterialTensor MaterialTensor::separable_trig(double a0, const Vec3& b) {
  return {"separable-trig",
          [a0, b](const Vec3& y) -> Mat3c {
            double q = a0;
            for (int i = 0; i < 3; ++i) q += b(i) * std::cos(kTwoPi * y(i));
            return q * Mat3c::Identity();
          },
          {b(0) != 0.0, b(1) != 0.0, b(2) != 0.0}};
}

MaterialTensor MaterialTensor::fourier(std::vector<std::pair<std::array<int, 3>, Mat3c>> terms) {
  std::array<bool, 3> varies{false, false, false};
  for (const auto& [k, c] : terms) {
    for (int a = 0; a < 3; ++a) varies[a] = varies[a] || (k[a] != 0 && c.norm() > 0.0);
  }
  return {"fourier",
          [terms = std::move(terms)](const Vec3& y) -> Mat3c {
            Mat3c m = Mat3c::Zero();
            for (const auto& [k, c] : terms) {
              const double phase = kTwoPi * (k[0] * y(0) + k[1] * y(1) + k[2] * y(2));
              m += std::polar(1.0, phase) * c;
            }
            return m;
          },
          varies};
}

MaterialTensor MaterialTensor::from_json(const nlohmann::json& j) {
  try {
    if (j.contains("fourier")) {
      std::vector<std::pair<std::array<int, 3>, Mat3c>> terms;
      for (const auto& t : j.at("fourier")) {
        const auto k = t.at("k").get<std::array<int, 3>>();
        const nlohmann::json* im = t.contains("im") ? &t.at("im") : nullptr;
        terms.emplace_back(k, matrix_from_json(t.at("re"), im));
      }
      if (terms.empty()) throw InputError("material: empty Fourier term list");
      return fourier(std::move(terms));
    }
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "identity") return identity(j.value("scale", 1.0));
    if (preset == "laminate") {
      return laminate(j.value("a", 2.0), j.value("b", 1.0), j.value("axis", 0));
    }
    if (preset == "separable-trig") {
      const auto b = j.at("b").get<std::array<double, 3>>();
      return separable_trig(j.at("a0").get<double>(), Vec3(b[0], b[1], b[2]));
    }
    throw InputError(fmt::format("material: unknown preset '{}'", preset));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("material: malformed description ({})", e.what()));
  }
}

void MaterialTensor::require_resolved(const GridShape& grid) const {
  for (int a = 0; a < 3; ++a) {
    if (varies_[a] && grid[a] == 1) {
      throw InputError(fmt::format(
          "material '{}' varies along axis {} but the lattice has a single point there", name_, a));
    }
  }
}

std::array<TrigPoly, 9> MaterialTensor::as_trig(const GridShape& grid) const {
  require_resolved(grid);
  std::array<std::vector<cplx>, 9> values;
  for (auto& v : values) v.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Mat3c a = eval_(grid.point(i));
    for (int e = 0; e < 9; ++e) values[e][i] = a(e / 3, e % 3);
  }
  std::array<TrigPoly, 9> out{TrigPoly(3, ValueRank::scalar), TrigPoly(3, ValueRank::scalar),
                              TrigPoly(3, ValueRank::scalar), TrigPoly(3, ValueRank::scalar),
                              TrigPoly(3, ValueRank::scalar), TrigPoly(3, ValueRank::scalar),
                              TrigPoly(3, ValueRank::scalar), TrigPoly(3, ValueRank::scalar),
                              TrigPoly(3, ValueRank::scalar)};
  for (int e = 0; e < 9; ++e) {
    fft_forward(grid, values[e]);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto k = grid.wavenumbers(i);
      const std::array<double, 3> f{kTwoPi * k[0], kTwoPi * k[1], kTwoPi * k[2]};
      out[e].add_term(f, values[e][i]);
    }
  }
  return out;
}

GalerkinTensor::GalerkinTensor(const MaterialTensor& material, GridShape lattice)
    : material_(material), lattice_(lattice), padded_(lattice.padded()) {
  material_.require_resolved(lattice_);
  for (auto& s : samples_) s.resize(padded_.size());
  for (std::size_t i = 0; i < padded_.size(); ++i) {
    const Mat3c a = material_(padded_.point(i));
    for (int e = 0; e < 9; ++e) samples_[e][i] = a(e / 3, e % 3);
  }
}

PeriodicField GalerkinTensor::apply(const PeriodicField& v) const {
  if (!(v.shape() == lattice_) || v.components() != 3) {
    throw InputError("GalerkinTensor::apply: field does not live on the operator lattice");
  }
  std::array<std::vector<cplx>, 3> vals;
  for (int c = 0; c < 3; ++c) vals[c] = v.sample(c, padded_);
  PeriodicField out(lattice_, 3);
  std::vector<cplx> prod(padded_.size());
  for (int a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < padded_.size(); ++i) {
      prod[i] = samples_[3 * a][i] * vals[0][i] + samples_[3 * a + 1][i] * vals[1][i] +
                samples_[3 * a + 2][i] * vals[2][i];
    }
    fft_forward(padded_, prod);
    std::vector<cplx> trunc(lattice_.size());
    resample_coefficients(padded_, prod, lattice_, trunc);
    for (std::size_t i = 0; i < lattice_.size(); ++i) out.at(a, i) = trunc[i];
  }
  return out;
}

MatrixXc GalerkinTensor::dense() const {
  std::array<std::vector<cplx>, 9> hat = samples_;
  for (auto& h : hat) fft_forward(padded_, h);
  const std::size_t n = lattice_.size();
  MatrixXc m(3 * n, 3 * n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto kj = lattice_.wavenumbers(j);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ki = lattice_.wavenumbers(i);
      const std::size_t d =
          padded_.index_of_wavenumber({ki[0] - kj[0], ki[1] - kj[1], ki[2] - kj[2]});
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) m(a * n + i, b * n + j) = hat[3 * a + b][d];
      }
    }
  }
  return m;
}

}  // namespace hommax
