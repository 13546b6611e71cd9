#include "hommax/corrector.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

namespace hommax {

namespace {

std::vector<Vec3> data_quasimomenta(const TwoScaleField& B0, const TwoScaleField& E0) {
  std::vector<Vec3> out;
  auto add = [&](const TrigPoly& micro) {
    for (const auto& xi : quasimomenta(micro)) {
      const Vec3 v(xi[0], xi[1], xi[2]);
      const bool seen = std::any_of(out.begin(), out.end(), [&](const Vec3& w) { return (w - v).norm() < 1e-10; });
      if (!seen) out.push_back(v);
    }
  };
  for (const auto& t : B0) add(t.micro);
  for (const auto& t : E0) add(t.micro);
  return out;
}

// Fine wavenumber offset (xi / 2 pi) / eps; must be an integer vector.
std::array<int, 3> fiber_offset(const Vec3& xi, int inv_eps) {
  std::array<int, 3> o{};
  for (int a = 0; a < 3; ++a) {
    const double r = xi(a) * inv_eps / kTwoPi;
    o[a] = static_cast<int>(std::lround(r));
    if (std::abs(r - o[a]) > 1e-9) {
      throw InputError(fmt::format("quasimomentum component {} is not periodic on the torus at 1/eps = {}", xi(a), inv_eps));
    }
  }
  return o;
}

TrigPoly envelope(double amplitude, bool sine) {
  const GridShape g(64, 1, 1);
  std::vector<cplx> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = kTwoPi * g.point(i)(0);
    v[i] = amplitude * std::exp(sine ? std::sin(x) : std::cos(x));
  }
  fft_forward(g, v);
  TrigPoly out(3, ValueRank::scalar);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(v[i]) < 1e-15) continue;
    const int k = g.wavenumbers(i)[0];
    out.add_term(std::vector<double>{kTwoPi * k, 0.0, 0.0}, v[i]);
  }
  return out;
}

TrigPoly y1_profile(const Vec3c& dir, cplx c0, cplx cplus, cplx cminus, int k) {
  const std::vector<double> kp{kTwoPi * k, 0, 0}, km{-kTwoPi * k, 0, 0};
  return TrigPoly::constant(3, Vec3c(dir * c0)) + TrigPoly::monomial(3, kp, Vec3c(dir * cplus)) +
         TrigPoly::monomial(3, km, Vec3c(dir * cminus));
}

}  // namespace

double TwoScaleAnsatz::energy(std::size_t node) const {
  double e = 0.0;
  for (const auto& sol : solutions) {
    for (const auto& [k, series] : sol.values) e += series.at(node).squaredNorm();
  }
  return e;
}

double TwoScaleAnsatz::effective_lambda(double rel) const {
  const double total = energy(0);
  double lam = 0.0, first = 0.0;
  for (const AmplitudeSystem& sys : systems) {
    const double l = std::abs(sys.lambda);
    if (l > degeneracy_tolerance(0.0) && (first == 0.0 || l < first)) first = l;
  }
  for (std::size_t s = 0; s < systems.size(); ++s) {
    double e = 0.0;
    for (const auto& [k, series] : solutions[s].values) e += series.front().squaredNorm();
    if (e > rel * total) lam = std::max(lam, std::abs(systems[s].lambda));
  }
  return std::max(lam, first);
}

TwoScaleAnsatz build_ansatz(const BlochProblem& problem, const TwoScaleField& B0, const TwoScaleField& E0,
                            const ForcingField& f, const ForcingField& g, const ModeSelection& sel,
                            const std::vector<double>& times) {
  validate_two_scale_divergence(B0, E0, problem.P());
  TwoScaleAnsatz out;
  out.times = times;
  double data = 0.0, captured = 0.0;
  for (const Vec3& xi : data_quasimomenta(B0, E0)) {
    const BlochSlice slice = bloch_eigensolve(problem, xi, sel);
    data += data_energy(B0, E0, xi, problem);
    for (std::size_t grp = 0; grp < slice.groups.size(); ++grp) {
      auto modes = slice.modes_of(static_cast<int>(grp));
      if (modes.empty()) continue;
      AmplitudeSystem sys = build_amplitude_system(std::move(modes), B0, E0, f, g, problem.P());
      for (const auto& [k, a] : sys.a0) captured += a.squaredNorm();
      out.lambda_max = std::max(out.lambda_max, std::abs(sys.lambda));
      out.solutions.push_back(solve_amplitude_system(sys, times));
      out.systems.push_back(std::move(sys));
    }
  }
  out.tail_fraction = data > 0.0 ? std::clamp(1.0 - captured / data, 0.0, 1.0) : 0.0;
  return out;
}

void add_modulated(PeriodicField& out, const PeriodicField& cell, const Vec3& xi, int inv_eps,
                   const Wavevector& kappa, cplx c) {
  const GridShape& fine = out.shape();
  const GridShape& lat = cell.shape();
  const auto off = fiber_offset(xi, inv_eps);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const Vec3c v = cell.vector_at(i);
    if (v.squaredNorm() == 0.0) continue;
    const auto k = lat.wavenumbers(i);
    const std::array<int, 3> w{kappa[0] + inv_eps * k[0] + off[0], kappa[1] + inv_eps * k[1] + off[1],
                               kappa[2] + inv_eps * k[2] + off[2]};
    if (!fine.contains_wavenumber(w)) {
      throw InputError(fmt::format("fine grid too coarse for wavenumber ({}, {}, {}) of the reconstruction", w[0], w[1], w[2]));
    }
    const std::size_t j = fine.index_of_wavenumber(w);
    out.set_vector(j, out.vector_at(j) + c * v);
  }
}

std::pair<PeriodicField, PeriodicField> reconstruct_two_scale(const TwoScaleAnsatz& ansatz, int inv_eps,
                                                              std::size_t node, const GridShape& grid) {
  PeriodicField B(grid, 3), E(grid, 3);
  const double t = ansatz.times.at(node);
  for (std::size_t s = 0; s < ansatz.systems.size(); ++s) {
    const AmplitudeSystem& sys = ansatz.systems[s];
    const cplx phase = std::exp(kI * (sys.lambda * t * inv_eps));
    for (const auto& [kappa, series] : ansatz.solutions[s].values) {
      const VectorXc& a = series.at(node);
      for (int l = 0; l < sys.multiplicity(); ++l) {
        if (a(l) == 0.0) continue;
        add_modulated(B, sys.modes[l].Phi, sys.xi, inv_eps, kappa, phase * a(l));
        add_modulated(E, sys.modes[l].Psi, sys.xi, inv_eps, kappa, phase * a(l));
      }
    }
  }
  return {B, E};
}

ClassicalCellFields classical_cell_fields(const GalerkinTensor& P, const GalerkinTensor& Q) {
  const Homogenization hp = homogenized_tensor(P), hq = homogenized_tensor(Q);
  ClassicalCellFields out{hp.tensor, hq.tensor, {}, {}};
  for (int i = 0; i < 3; ++i) {
    out.B[i] = Q.apply(corrected_field(hq.correctors[i], Vec3c::Unit(i)));
    out.E[i] = corrected_field(hp.correctors[i], Vec3c::Unit(i));
  }
  return out;
}

std::pair<PeriodicField, PeriodicField> classical_corrector(const HomogenizedTrajectory& hom, std::size_t node,
                                                            const ClassicalCellFields& cells, int inv_eps,
                                                            const GridShape& grid) {
  PeriodicField B(grid, 3), E(grid, 3);
  const Mat3c QHinv = cells.QH.inverse();
  const Vec3 zero = Vec3::Zero();
  for (const auto& [kappa, series] : hom.values) {
    const auto& [b, e] = series.at(node);
    const Vec3c h = QHinv * b;
    for (int i = 0; i < 3; ++i) {
      if (h(i) != 0.0) add_modulated(B, cells.B[i], zero, inv_eps, kappa, h(i));
      if (e(i) != 0.0) add_modulated(E, cells.E[i], zero, inv_eps, kappa, e(i));
    }
  }
  return {B, E};
}

double l2_error(const PeriodicField& a, const PeriodicField& b, const PointwiseTensor* weight) {
  if (!(a.shape() == b.shape()) || a.components() != b.components()) {
    throw InputError("l2_error: fields live on different grids");
  }
  const PeriodicField d = a - b;
  const double num = weight ? std::real(cell_inner(weight->apply(d), d)) : d.coeffs().squaredNorm();
  const double den = weight ? std::real(cell_inner(weight->apply(b), b)) : b.coeffs().squaredNorm();
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() == 1) return v.front();
  double s = 0.0;
  for (std::size_t n = 1; n < t.size(); ++n) s += 0.5 * (t[n] - t[n - 1]) * (v[n] + v[n - 1]);
  return s;
}

double l2_error(const std::vector<PeriodicField>& a, const std::vector<PeriodicField>& b,
                const std::vector<double>& times) {
  if (a.size() != b.size() || a.size() != times.size()) throw InputError("l2_error: snapshot counts differ");
  std::vector<double> num(a.size()), den(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (!(a[n].shape() == b[n].shape())) throw InputError("l2_error: fields live on different grids");
    num[n] = (a[n] - b[n]).coeffs().squaredNorm();
    den[n] = b[n].coeffs().squaredNorm();
  }
  const double d = trapezoid(times, den);
  return d > 0.0 ? std::sqrt(trapezoid(times, num) / d) : std::sqrt(trapezoid(times, num));
}

PeriodicField low_pass(const PeriodicField& f, double cutoff) {
  PeriodicField out = f;
  for (std::size_t i = 0; i < f.lattice_size(); ++i) {
    const auto k = f.shape().wavenumbers(i);
    if (kTwoPi * Vec3(k[0], k[1], k[2]).norm() <= cutoff + 1e-12) continue;
    for (int c = 0; c < f.components(); ++c) out.at(c, i) = 0.0;
  }
  return out;
}

EnergyConvergence energy_convergence_metric(const FineTrajectory& fine, const TwoScaleAnsatz& ansatz) {
  if (fine.energy.t.size() != ansatz.times.size()) throw InputError("energy metric: time grids differ");
  std::vector<double> two(ansatz.times.size());
  for (std::size_t n = 0; n < two.size(); ++n) {
    if (std::abs(fine.energy.t[n] - ansatz.times[n]) > 1e-12) throw InputError("energy metric: time grids differ");
    two[n] = ansatz.energy(n);
  }
  EnergyConvergence e;
  e.fine = trapezoid(fine.energy.t, fine.energy.H);
  e.two_scale = trapezoid(ansatz.times, two);
  e.gap = std::abs(e.fine - e.two_scale) / e.two_scale;
  return e;
}

StudyResult corrector_study(const StudyConfig& cfg) {
  const GalerkinTensor P(cfg.P, cfg.cell), Q(cfg.Q, cfg.cell);
  const BlochProblem problem(P, Q);
  const auto times = uniform_nodes(cfg.T, cfg.nodes);

  StudyResult out;
  const TwoScaleAnsatz ansatz = build_ansatz(problem, cfg.B0, cfg.E0, cfg.f, cfg.g, cfg.selection, times);
  out.lambda_eff = ansatz.effective_lambda();
  if (ansatz.tail_fraction > 1e-6) {
    out.warnings.push_back(fmt::format("retained modes miss {:.3e} of the data energy", ansatz.tail_fraction));
  }

  const ClassicalCellFields cells = classical_cell_fields(P, Q);
  const HomogenizedTrajectory hom =
      homogenized_solve(cells.PH, cells.QH, homogenized_initial_data(cfg.B0, cfg.E0, P, cells.PH),
                        homogenized_forcing(cfg.f, cfg.g), times);

  // One sub-run per eps; warnings are kept per run so the merged order is fixed.
  auto run_one = [&](int inv_eps, std::vector<std::string>& warnings) {
    const auto start = std::chrono::steady_clock::now();
    for (int a = 0; a < 3; ++a) {
      if (cfg.cell[a] > 1 && cfg.fine[a] % (cfg.cell[a] * inv_eps) != 0) {
        throw InputError(fmt::format("fine grid axis {} ({}) is not a multiple of N/eps = {}", a, cfg.fine[a],
                                     cfg.cell[a] * inv_eps));
      }
    }
    StudyRow row;
    row.inv_eps = inv_eps;
    row.tail_fraction = ansatz.tail_fraction;
    const double eps = 1.0 / inv_eps;
    const double lam = std::max(out.lambda_eff, 1.0);
    row.dt = cfg.dt ? *cfg.dt : eps / (cfg.dt_factor * lam);
    if (row.dt > eps / (10.0 * lam)) {
      warnings.push_back(fmt::format("1/eps = {}: dt = {:.3e} does not resolve the fastest retained frequency "
                                         "(advised dt <= {:.3e})", inv_eps, row.dt, eps / (10.0 * lam)));
    }

    const FineSolver solver(cfg.P, cfg.Q, inv_eps, cfg.fine);
    const FieldState init = fine_initial_state(cfg.B0, cfg.E0, inv_eps, cfg.fine);
    const DivergenceReport div = validate_divergence(solver, init, PeriodicField(cfg.fine, 1));
    if (!div.passed) throw InputError("fine initial data violate the divergence constraints");
    const FineTrajectory fine = solver.solve(init, fine_forcing(cfg.f, inv_eps, cfg.fine),
                                             fine_forcing(cfg.g, inv_eps, cfg.fine), times,
                                             {row.dt, cfg.krylov_rtol, 500});
    row.energy_drift = fine.energy.relative_drift();

    std::vector<PeriodicField> fb, fe, tb, te, cb, ce, lfb, lfe, lhb, lhe;
    for (std::size_t n = 0; n < times.size(); ++n) {
      const FieldState& s = fine.states[n];
      fb.push_back(s.B);
      fe.push_back(s.E);
      auto [b2, e2] = reconstruct_two_scale(ansatz, inv_eps, n, cfg.fine);
      tb.push_back(std::move(b2));
      te.push_back(std::move(e2));
      auto [b1, e1] = classical_corrector(hom, n, cells, inv_eps, cfg.fine);
      cb.push_back(std::move(b1));
      ce.push_back(std::move(e1));
      const FieldState h = hom.state(n, cfg.fine);
      lfb.push_back(low_pass(s.B, cfg.low_pass_cutoff));
      lfe.push_back(low_pass(s.E, cfg.low_pass_cutoff));
      lhb.push_back(low_pass(h.B, cfg.low_pass_cutoff));
      lhe.push_back(low_pass(h.E, cfg.low_pass_cutoff));
    }
    row.err_two_scale_B = l2_error(tb, fb, times);
    row.err_two_scale_E = l2_error(te, fe, times);
    row.err_classical_B = l2_error(cb, fb, times);
    row.err_classical_E = l2_error(ce, fe, times);
    row.err_weak_limit = std::hypot(l2_error(lfb, lhb, times), l2_error(lfe, lhe, times));
    row.energy_gap = energy_convergence_metric(fine, ansatz).gap;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
  };

  const std::size_t n_runs = cfg.inv_eps.size();
  std::vector<StudyRow> rows(n_runs);
  std::vector<std::vector<std::string>> warnings(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      try {
        rows[i] = run_one(cfg.inv_eps[i], warnings[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(cfg.threads, 1, std::max<std::size_t>(n_runs, 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < n_runs; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.warnings.insert(out.warnings.end(), warnings[i].begin(), warnings[i].end());
  }
  out.rows = std::move(rows);
  return out;
}

TrigPoly envelope_b() { return envelope(1.0, false); }
TrigPoly envelope_e() { return envelope(0.5, true); }

std::pair<TwoScaleField, TwoScaleField> generic_laminate_data() {
  auto [B0, E0] = well_prepared_laminate_data();
  const TrigPoly one = TrigPoly::constant(3, cplx(1.0));
  B0.push_back({one, y1_profile(Vec3c::UnitZ(), 0.0, cplx(0, -0.15), cplx(0, 0.15), 1)});
  E0.push_back({one, y1_profile(Vec3c::UnitY(), 0.0, 0.125, 0.125, 2)});
  return {B0, E0};
}

std::pair<TwoScaleField, TwoScaleField> well_prepared_laminate_data() {
  const TwoScaleField B0{{envelope_b(), y1_profile(Vec3c::UnitZ(), 1.0, 0.25, 0.25, 1)}};
  const TwoScaleField E0{{envelope_e(), TrigPoly::constant(3, Vec3c(Vec3c::UnitY()))}};
  return {B0, E0};
}

}  // namespace hommax
