#include "hommax/maxwell.hpp"

#include "hommax/krylov.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace hommax {

namespace {

constexpr double kDivergenceTolerance = 1e-8;

// 2 pi k with the Nyquist wavenumber of even axes set to zero.
Vec3 spectral_wavevector(const GridShape& g, std::size_t idx) {
  const auto k = g.wavenumbers(idx);
  Vec3 w;
  for (int a = 0; a < 3; ++a) w(a) = (g[a] > 1 && 2 * k[a] == -g[a]) ? 0.0 : kTwoPi * k[a];
  return w;
}

double max_wavevector(const GridShape& g) {
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, spectral_wavevector(g, i).norm());
  return m;
}

TrigPoly macro_poly(const std::map<Wavevector, cplx>& coeffs) {
  TrigPoly out(3, ValueRank::scalar);
  for (const auto& [k, c] : coeffs) {
    out.add_term(std::vector<double>{kTwoPi * k[0], kTwoPi * k[1], kTwoPi * k[2]}, c);
  }
  return out;
}

std::pair<Mat3c, Mat3c> sqrt_and_inverse_sqrt(const Mat3c& A, const char* name) {
  if ((A - A.adjoint()).norm() > 1e-10 * std::max(1.0, A.norm())) {
    throw InputError(fmt::format("homogenized tensor {} is not Hermitian", name));
  }
  Eigen::SelfAdjointEigenSolver<Mat3c> es(0.5 * (A + A.adjoint()));
  if (es.eigenvalues().minCoeff() <= 1e-14 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    throw InputError(fmt::format("homogenized tensor {} is singular or indefinite", name));
  }
  return {es.operatorSqrt(), es.operatorInverseSqrt()};
}

Vec3c kappa_vector(const Wavevector& k) { return kTwoPi * Vec3(k[0], k[1], k[2]).cast<cplx>(); }

}  // namespace

TrigPoly compose_two_scale(const TrigPoly& macro, const TrigPoly& micro, int inv_eps) {
  if (inv_eps < 1) throw InputError("1/eps must be a positive integer");
  if (micro.dim() != 3 || micro.rank() != ValueRank::vector3) {
    throw InputError("two-scale composition: micro profile must be a 3-vector polynomial in y");
  }
  const TrigPoly mac = macro_poly(macro_coefficients(macro));
  TrigPoly out(3, ValueRank::vector3);
  for (const auto& [km, cm] : mac.terms()) {
    const auto fm = mac.frequency(km);
    for (const auto& [ku, cu] : micro.terms()) {
      const auto fu = micro.frequency(ku);
      const std::vector<double> f{fm[0] + inv_eps * fu[0], fm[1] + inv_eps * fu[1], fm[2] + inv_eps * fu[2]};
      out.add_term(f, Coeff{cm[0] * cu[0], cm[0] * cu[1], cm[0] * cu[2]});
    }
  }
  if (!is_lattice_periodic(out)) {
    throw InputError("two-scale data are not periodic on the macroscopic torus at this eps");
  }
  return out;
}

FieldState fine_initial_state(const TwoScaleField& B0, const TwoScaleField& E0, int inv_eps,
                              const GridShape& grid) {
  FieldState s{0.0, PeriodicField(grid, 3), PeriodicField(grid, 3), inv_eps};
  for (const TwoScaleTerm& t : B0) s.B = s.B + PeriodicField::from_trig(compose_two_scale(t.macro, t.micro, inv_eps), grid);
  for (const TwoScaleTerm& t : E0) s.E = s.E + PeriodicField::from_trig(compose_two_scale(t.macro, t.micro, inv_eps), grid);
  return s;
}

PeriodicField HarmonicField::at(double t, const GridShape& grid) const {
  PeriodicField out(grid, 3);
  for (const auto& [w, field] : parts) out.coeffs() += std::exp(kI * (w * t)) * field.coeffs();
  return out;
}

HarmonicField fine_forcing(const ForcingField& terms, int inv_eps, const GridShape& grid) {
  HarmonicField out;
  for (const ForcingTerm& term : terms) {
    if (term.micro.dim() != 4 || term.micro.rank() != ValueRank::vector3) {
      throw InputError("forcing: micro profiles must be 3-vector polynomials in (s, y)");
    }
    const TrigPoly mac = macro_poly(macro_coefficients(term.macro));
    std::map<std::int64_t, TrigPoly> by_time;
    for (const auto& [key, c] : term.micro.terms()) {
      const auto f = term.micro.frequency(key);
      auto it = by_time.try_emplace(key[0], 3, ValueRank::vector3).first;
      it->second.add_term(std::vector<double>{f[1], f[2], f[3]}, c);
    }
    for (const auto& [skey, micro] : by_time) {
      const double w = static_cast<double>(skey) * kFrequencyQuantum * inv_eps;
      const PeriodicField field = PeriodicField::from_trig(compose_two_scale(mac, micro, inv_eps), grid);
      auto same = std::find_if(out.parts.begin(), out.parts.end(),
                               [&](const auto& p) { return std::abs(p.first - w) <= 1e-9 * std::max(1.0, std::abs(w)); });
      if (same == out.parts.end()) {
        out.parts.emplace_back(w, field);
      } else {
        same->second = same->second + field;
      }
    }
  }
  return out;
}

PeriodicField spectral_curl(const PeriodicField& v) {
  PeriodicField out(v.shape(), 3);
  for (std::size_t i = 0; i < v.lattice_size(); ++i) {
    out.set_vector(i, cross(kI * spectral_wavevector(v.shape(), i).cast<cplx>(), v.vector_at(i)));
  }
  return out;
}

PeriodicField spectral_divergence(const PeriodicField& v) {
  PeriodicField out(v.shape(), 1);
  for (std::size_t i = 0; i < v.lattice_size(); ++i) {
    out.at(0, i) = kI * spectral_wavevector(v.shape(), i).cast<cplx>().transpose() * v.vector_at(i);
  }
  return out;
}

PointwiseTensor::PointwiseTensor(const MaterialTensor& material, int inv_eps, const GridShape& grid,
                                 bool inverse)
    : grid_(grid), values_(grid.size()) {
  for (int a = 0; a < 3; ++a) {
    if (material.varies()[a] && grid[a] % inv_eps != 0) {
      throw InputError(fmt::format("fine grid axis {} ({} points) is not aligned with 1/eps = {}", a, grid[a], inv_eps));
    }
  }
  material.require_resolved(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vec3 y = grid.point(i) * inv_eps;
    y = y.array() - y.array().floor();
    const Mat3c m = material(y);
    values_[i] = inverse ? Mat3c(m.inverse()) : m;
  }
  constant_ = material.is_constant();
}

PeriodicField PointwiseTensor::apply(const PeriodicField& v) const {
  const std::size_t n = grid_.size();
  if (constant_) {
    PeriodicField out(grid_, 3);
    for (std::size_t i = 0; i < n; ++i) out.set_vector(i, values_[0] * v.vector_at(i));
    return out;
  }
  std::array<std::vector<cplx>, 3> s;
  for (int c = 0; c < 3; ++c) {
    s[c].assign(v.component(c).begin(), v.component(c).end());
    fft_backward(grid_, s[c]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3c r = values_[i] * Vec3c(s[0][i], s[1][i], s[2][i]);
    for (int c = 0; c < 3; ++c) s[c][i] = r(c);
  }
  PeriodicField out(grid_, 3);
  for (int c = 0; c < 3; ++c) {
    fft_forward(grid_, s[c]);
    out.component(c) = Eigen::Map<const VectorXc>(s[c].data(), static_cast<Eigen::Index>(n));
  }
  return out;
}

double EnergyReport::relative_drift() const {
  double d = 0.0;
  for (double h : H) d = std::max(d, std::abs(h - H.front()) / H.front());
  return d;
}

double EnergyReport::balance_defect() const {
  double d = 0.0;
  for (std::size_t n = 0; n < H.size(); ++n) d = std::max(d, std::abs(H[n] - H.front() - work[n]) / H.front());
  return d;
}

FineSolver::FineSolver(const MaterialTensor& P, const MaterialTensor& Q, int inv_eps, const GridShape& grid)
    : grid_(grid),
      inv_eps_(inv_eps),
      P_(P, inv_eps, grid, false),
      Pinv_(P, inv_eps, grid, true),
      Qinv_(Q, inv_eps, grid, true) {}

VectorXc FineSolver::stack(const PeriodicField& B, const PeriodicField& E) const {
  VectorXc x(B.coeffs().size() + E.coeffs().size());
  x << B.coeffs(), E.coeffs();
  return x;
}

std::pair<PeriodicField, PeriodicField> FineSolver::unstack(const VectorXc& x) const {
  const Eigen::Index m = x.size() / 2;
  return {PeriodicField(grid_, 3, x.head(m)), PeriodicField(grid_, 3, x.tail(m))};
}

VectorXc FineSolver::generator(const VectorXc& x) const {
  const auto [B, E] = unstack(x);
  return stack(spectral_curl(E) * -1.0, Pinv_.apply(spectral_curl(Qinv_.apply(B))));
}

VectorXc FineSolver::weight(const VectorXc& x) const {
  const auto [B, E] = unstack(x);
  return stack(Qinv_.apply(B), P_.apply(E));
}

double FineSolver::energy(const FieldState& s) const {
  return std::real(cell_inner(Qinv_.apply(s.B), s.B) + cell_inner(P_.apply(s.E), s.E));
}

double FineSolver::power(const PeriodicField& f, const PeriodicField& g, const FieldState& s) const {
  return 2.0 * std::real(cell_inner(Qinv_.apply(f), s.B) + cell_inner(g, s.E));
}

int FineSolver::step(FieldState& s, double h, const HarmonicField& f, const HarmonicField& g, double rtol,
                     int max_iterations) const {
  const double tm = s.t + 0.5 * h;
  VectorXc force = VectorXc::Zero(6 * static_cast<Eigen::Index>(grid_.size()));
  if (!f.empty() || !g.empty()) force = stack(f.at(tm, grid_), Pinv_.apply(g.at(tm, grid_)));

  // (I - L'^2) x+ = (I + L') (x + L' x + h F),  L' = (h/2) L, self-adjoint in W.
  const VectorXc x = stack(s.B, s.E);
  const auto Lh = [&](const VectorXc& v) -> VectorXc { return 0.5 * h * generator(v); };
  const VectorXc r = x + Lh(x) + h * force;
  const VectorXc rhs = r + Lh(r);
  const LinearMap op = [&](const VectorXc& v) -> VectorXc { return v - Lh(Lh(v)); };
  const LinearMap w = [this](const VectorXc& v) { return weight(v); };
  const CgResult cg = conjugate_gradient(op, rhs, x, rtol, max_iterations, {}, w);
  if (!cg.converged) {
    throw NumericalError(fmt::format("implicit midpoint step: Krylov solve stalled at relative residual {:.3e} after {} iterations",
                                     cg.relative_residual, cg.iterations));
  }
  // Reassemble x+ from the midpoint so the divergence updates are exact.
  const VectorXc next = x + h * (generator(0.5 * (x + cg.x)) + force);
  std::tie(s.B, s.E) = unstack(next);
  s.t += h;
  return cg.iterations;
}

std::pair<double, double> FineSolver::divergence_norms(const FieldState& s, const PeriodicField& rho) const {
  return {spectral_divergence(s.B).coeffs().norm(), (charge(s) - rho).coeffs().norm()};
}

FineTrajectory FineSolver::solve(const FieldState& init, const HarmonicField& f, const HarmonicField& g,
                                 const std::vector<double>& times, const FineSolveOptions& opts) const {
  if (times.empty() || !(opts.dt > 0.0)) throw InputError("fine solve: need time nodes and a positive step");
  if (!(init.grid() == grid_)) throw InputError("fine solve: initial state lives on a different grid");
  FineTrajectory out;
  FieldState s = init;
  PeriodicField rho = charge(s);
  double work = 0.0;

  auto record = [&](const FieldState& st) {
    const auto [db, dr] = divergence_norms(st, rho);
    out.states.push_back(st);
    out.energy.t.push_back(st.t);
    out.energy.H.push_back(energy(st));
    out.energy.divB.push_back(db);
    out.energy.divPE_minus_rho.push_back(dr);
    out.energy.work.push_back(work);
  };

  if (std::abs(times.front() - s.t) > 1e-14) {
    throw InputError("fine solve: the first node must be the initial time");
  }
  record(s);
  for (std::size_t n = 1; n < times.size(); ++n) {
    const double span = times[n] - times[n - 1];
    if (!(span > 0.0)) throw InputError("fine solve: time nodes must increase");
    const int steps = static_cast<int>(std::ceil(span / opts.dt - 1e-9));
    const double h = span / steps;
    out.dt_used = std::max(out.dt_used, h);
    for (int k = 0; k < steps; ++k) {
      const FieldState before = s;
      out.total_iterations += step(s, h, f, g, opts.rtol, opts.max_iterations);
      if (!f.empty() || !g.empty()) {
        const double tm = before.t + 0.5 * h;
        FieldState mid{tm, (before.B + s.B) * 0.5, (before.E + s.E) * 0.5, s.inv_eps};
        work += h * power(f.at(tm, grid_), g.at(tm, grid_), mid);
        if (!g.empty()) rho = rho + spectral_divergence(g.at(tm, grid_)) * h;
      }
    }
    s.t = times[n];
    record(s);
  }
  return out;
}

DivergenceReport validate_divergence(const FineSolver& solver, const FieldState& s, const PeriodicField& rho) {
  DivergenceReport r;
  std::tie(r.divB, r.divPE_minus_rho) = solver.divergence_norms(s, rho);
  r.reference = max_wavevector(s.grid()) * (s.B.coeffs().norm() + solver.apply_P(s.E).coeffs().norm());
  r.passed = r.reference == 0.0 ||
             (r.divB <= kDivergenceTolerance * r.reference && r.divPE_minus_rho <= kDivergenceTolerance * r.reference);
  return r;
}

HomogenizedData homogenized_initial_data(const TwoScaleField& B0, const TwoScaleField& E0,
                                         const GalerkinTensor& P, const Mat3c& PH) {
  HomogenizedData out;
  const std::vector<double> zero{0.0, 0.0, 0.0};
  auto add = [&](const TrigPoly& macro, const Vec3c& v, bool magnetic) {
    for (const auto& [k, c] : macro_coefficients(macro)) {
      auto& slot = out.modes[k];
      (magnetic ? slot.first : slot.second) += c * v;
    }
  };
  for (const TwoScaleTerm& t : B0) {
    const Coeff m = mean(gelfand_transform(t.micro, zero));
    add(t.macro, Vec3c(m[0], m[1], m[2]), true);
  }
  const Mat3c PHinv = PH.inverse();
  for (const TwoScaleTerm& t : E0) {
    const PeriodicField e = PeriodicField::from_trig(gelfand_transform(t.micro, zero), P.lattice());
    add(t.macro, PHinv * P.apply(e).mean_vector(), false);
  }
  return out;
}

HomogenizedData homogenized_forcing(const ForcingField& f, const ForcingField& g) {
  HomogenizedData out;
  auto add = [&](const ForcingField& terms, bool magnetic) {
    for (const ForcingTerm& t : terms) {
      const Coeff m = mean(t.micro);
      for (const auto& [k, c] : macro_coefficients(t.macro)) {
        auto& slot = out.modes[k];
        (magnetic ? slot.first : slot.second) += c * Vec3c(m[0], m[1], m[2]);
      }
    }
  };
  add(f, true);
  add(g, false);
  return out;
}

MatrixXc homogenized_generator(const Mat3c& PH, const Mat3c& QH, const Wavevector& kappa) {
  const Vec3c k = kappa_vector(kappa);
  Mat3c K;  // K v = i kappa x v
  for (int c = 0; c < 3; ++c) K.col(c) = kI * cross(k, Vec3c::Unit(c));
  MatrixXc G = MatrixXc::Zero(6, 6);
  G.block(0, 3, 3, 3) = -K;
  G.block(3, 0, 3, 3) = PH.inverse() * K * QH.inverse();
  return G;
}

HomogenizedTrajectory homogenized_solve(const Mat3c& PH, const Mat3c& QH, const HomogenizedData& init,
                                        const HomogenizedData& forcing, const std::vector<double>& times) {
  const auto [PHs, PHis] = sqrt_and_inverse_sqrt(PH, "P_H");
  const auto [QHs, QHis] = sqrt_and_inverse_sqrt(QH, "Q_H");
  // y = S x with S = diag(Q_H^{-1/2}, P_H^{1/2}) makes the generator skew-Hermitian.
  MatrixXc S = MatrixXc::Zero(6, 6), Sinv = MatrixXc::Zero(6, 6);
  S.block(0, 0, 3, 3) = QHis;
  S.block(3, 3, 3, 3) = PHs;
  Sinv.block(0, 0, 3, 3) = QHs;
  Sinv.block(3, 3, 3, 3) = PHis;
  const Mat3c PHinv = PH.inverse();

  std::set<Wavevector> kappas;
  for (const auto& [k, v] : init.modes) kappas.insert(k);
  for (const auto& [k, v] : forcing.modes) kappas.insert(k);

  HomogenizedTrajectory out;
  out.times = times;
  for (const Wavevector& k : kappas) {
    VectorXc x0 = VectorXc::Zero(6), F = VectorXc::Zero(6);
    if (auto it = init.modes.find(k); it != init.modes.end()) x0 << it->second.first, it->second.second;
    if (auto it = forcing.modes.find(k); it != forcing.modes.end()) {
      F << it->second.first, PHinv * it->second.second;
    }
    const MatrixXc G = S * homogenized_generator(PH, QH, k) * Sinv;
    const VectorXc y0 = S * x0, Fy = S * F;
    auto& series = out.values[k];
    for (double t : times) {
      const VectorXc x = Sinv * amplitude_at(G, y0, Fy, t);
      series.emplace_back(x.head<3>(), x.tail<3>());
    }
  }
  return out;
}

FieldState HomogenizedTrajectory::state(std::size_t node, const GridShape& grid) const {
  FieldState s{times.at(node), PeriodicField(grid, 3), PeriodicField(grid, 3), 1};
  for (const auto& [k, series] : values) {
    if (!grid.contains_wavenumber(k)) {
      throw InputError(fmt::format("homogenized mode ({}, {}, {}) is not representable on the grid", k[0], k[1], k[2]));
    }
    const std::size_t idx = grid.index_of_wavenumber(k);
    s.B.set_vector(idx, series.at(node).first);
    s.E.set_vector(idx, series.at(node).second);
  }
  return s;
}

double HomogenizedTrajectory::energy(std::size_t node, const Mat3c& PH, const Mat3c& QH) const {
  const Mat3c QHinv = QH.inverse();
  double h = 0.0;
  for (const auto& [k, series] : values) {
    const auto& [B, E] = series.at(node);
    h += std::real(B.dot(QHinv * B) + E.dot(PH * E));
  }
  return h;
}

}  // namespace hommax
