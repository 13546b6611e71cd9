#include "hommax/app.hpp"

#include <fftw3.h>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace hommax {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Runs body(i) for i < n on up to `threads` workers; rethrows the first failure by index.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json resolve(const json& j, const fs::path& base) {
  return j.is_string() ? read_json(base / j.get<std::string>()) : j;
}

GridShape grid_from_json(const json& j, const char* what) {
  if (j.is_number_integer()) {
    const int n = j.get<int>();
    return {n, n, n};
  }
  const auto n = j.get<std::array<int, 3>>();
  for (int a : n) {
    if (a < 1) throw InputError(fmt::format("config: '{}' sizes must be positive", what));
  }
  return {n[0], n[1], n[2]};
}

TwoScaleField two_scale_from_json(const json& j) {
  TwoScaleField out;
  for (const auto& t : j) out.push_back({TrigPoly::from_json(t.at("macro"), 3), TrigPoly::from_json(t.at("micro"), 3)});
  return out;
}

ForcingField forcing_from_json(const json& j) {
  ForcingField out;
  for (const auto& t : j) out.push_back({TrigPoly::from_json(t.at("macro"), 3), TrigPoly::from_json(t.at("micro"), 4)});
  return out;
}

int inv_eps_of(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError(fmt::format("config: eps = {} outside (0, 1]", eps));
  const double r = std::round(1.0 / eps);
  if (std::abs(r * eps - 1.0) > 1e-9) throw InputError(fmt::format("config: eps = {} is not 1/n", eps));
  return static_cast<int>(r);
}

json vec_json(const Vec3& v) { return {v(0), v(1), v(2)}; }

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

int report_checks(const std::vector<Check>& checks, std::ostream& log, json& summary) {
  bool all = true;
  json arr = json::array();
  for (const Check& c : checks) {
    fmt::print(log, "{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    all = all && c.passed;
  }
  summary["checks"] = arr;
  summary["passed"] = all;
  return all ? kExitPass : kExitAcceptance;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

std::string series(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += fmt::format("{}{:.4e}", s.empty() ? "" : " > ", x);
  return s;
}

std::vector<double> column(const std::vector<StudyRow>& rows, double StudyRow::*m) {
  std::vector<double> out;
  for (const StudyRow& r : rows) out.push_back(r.*m);
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& source, const json& tol) {
  write_text(dir / "manifest.json", manifest(command, source, tol).dump(2) + "\n");
}

}  // namespace

MaterialPair material_pair_from_json(const json& j, const fs::path& base) {
  const json m = resolve(j, base);
  auto tensor = [&](const char* key) {
    return m.contains(key) ? MaterialTensor::from_json(resolve(m.at(key), base)) : MaterialTensor::identity();
  };
  return {tensor("P"), tensor("Q")};
}

std::pair<TwoScaleField, TwoScaleField> data_preset(const std::string& name) {
  if (name == "laminate-generic") return generic_laminate_data();
  if (name == "laminate-well-prepared") return well_prepared_laminate_data();
  throw InputError(fmt::format("config: unknown data preset '{}'", name));
}

const GridShape& ExperimentConfig::fine_grid() const {
  if (!fine) throw InputError("config: 'fine' grid required for fine-scale runs");
  return *fine;
}

ExperimentConfig config_from_json(const json& j, const fs::path& base) {
  static const std::set<std::string> known{"material", "N",  "lambda_max", "nmodes", "xi",   "data",  "eps",
                                           "T",        "nodes", "dt_factor", "dt",  "fine", "expect", "out",
                                           "seed",     "threads"};
  if (!j.is_object()) throw InputError("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw InputError(fmt::format("config: unknown key '{}'", key));
  }
  ExperimentConfig c;
  c.source = j;
  try {
    if (j.contains("material")) c.material = material_pair_from_json(j.at("material"), base);
    if (j.contains("N")) c.cell = grid_from_json(j.at("N"), "N");
    if (j.contains("lambda_max")) c.selection = ModeSelection::up_to(j.at("lambda_max").get<double>());
    if (j.contains("nmodes")) {
      if (j.contains("lambda_max")) throw InputError("config: give either 'lambda_max' or 'nmodes'");
      c.selection = ModeSelection::smallest(j.at("nmodes").get<int>());
    }
    if (j.contains("xi")) {
      const json& x = j.at("xi");
      if (x.is_string()) {
        c.xi = xi_path(x.get<std::string>(), base);
      } else {
        c.xi.clear();
        for (const auto& t : x) {
          const auto v = t.get<std::array<double, 3>>();
          c.xi.emplace_back(v[0], v[1], v[2]);
        }
      }
      if (c.xi.empty()) throw InputError("config: empty xi set");
    }
    if (j.contains("data")) {
      const json d = resolve(j.at("data"), base);
      if (d.contains("preset")) {
        std::tie(c.B0, c.E0) = data_preset(d.at("preset").get<std::string>());
      } else {
        if (d.contains("B0")) c.B0 = two_scale_from_json(resolve(d.at("B0"), base));
        if (d.contains("E0")) c.E0 = two_scale_from_json(resolve(d.at("E0"), base));
      }
      if (d.contains("f")) c.f = forcing_from_json(resolve(d.at("f"), base));
      if (d.contains("g")) c.g = forcing_from_json(resolve(d.at("g"), base));
    }
    if (j.contains("eps")) {
      c.inv_eps.clear();
      for (const auto& e : j.at("eps")) c.inv_eps.push_back(inv_eps_of(e.get<double>()));
      if (c.inv_eps.empty()) throw InputError("config: empty eps list");
    }
    c.T = j.value("T", c.T);
    c.nodes = j.value("nodes", c.nodes);
    c.dt_factor = j.value("dt_factor", c.dt_factor);
    if (j.contains("dt")) c.dt = j.at("dt").get<double>();
    if (j.contains("fine")) c.fine = grid_from_json(j.at("fine"), "fine");
    c.expect = j.value("expect", std::string{});
    if (!c.expect.empty() && c.expect != "generic" && c.expect != "well-prepared") {
      throw InputError(fmt::format("config: 'expect' must be 'generic' or 'well-prepared', not '{}'", c.expect));
    }
    if (j.contains("out")) c.out = base / j.at("out").get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw InputError(fmt::format("config: {}", e.what()));
  }
  if (c.T <= 0.0 || c.nodes < 2 || c.dt_factor <= 0.0 || (c.dt && *c.dt <= 0.0) || c.threads < 1) {
    throw InputError("config: T, dt, dt_factor and threads must be positive and nodes >= 2");
  }
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  return config_from_json(read_json(file), file.parent_path());
}

std::vector<Vec3> xi_path(const std::string& name, const fs::path& base) {
  if (name == "gamma") return {Vec3::Zero()};
  if (name == "gamma-x") {
    std::vector<Vec3> out;
    for (int i = 0; i <= 10; ++i) out.emplace_back(kPi * i / 10.0, 0.0, 0.0);
    return out;
  }
  if (name == "acceptance") return {Vec3::Zero(), Vec3(kPi, 0, 0), Vec3(0.7, -0.3, 0.1)};
  const fs::path file = base / name;
  std::ifstream is(file);
  if (!is) throw InputError(fmt::format("xi path: '{}' is neither a preset nor a readable file", name));
  std::vector<Vec3> out;
  if (file.extension() == ".json") {
    for (const auto& t : read_json(file)) {
      const auto v = t.get<std::array<double, 3>>();
      out.emplace_back(v[0], v[1], v[2]);
    }
  } else {
    std::string line;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      Vec3 v;
      if (!(ls >> v(0))) continue;
      if (!(ls >> v(1) >> v(2))) throw InputError(fmt::format("xi path: malformed line '{}'", line));
      out.push_back(v);
    }
  }
  return out;
}

std::vector<BandRow> band_rows(const BlochSlice& slice, std::optional<int> n_modes) {
  std::vector<std::size_t> order(slice.groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double la = slice.groups[a].lambda, lb = slice.groups[b].lambda;
    if (std::abs(std::abs(la) - std::abs(lb)) > degeneracy_tolerance(std::max(std::abs(la), std::abs(lb)))) {
      return std::abs(la) < std::abs(lb);
    }
    return la < lb;
  });
  std::vector<BandRow> rows;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (n_modes && static_cast<int>(rows.size()) >= *n_modes) break;
    const BandGroup& grp = slice.groups[order[rank]];
    for (int m = 0; m < grp.multiplicity; ++m) {
      rows.push_back({slice.xi, static_cast<int>(rank), slice.eigenvalues[grp.first + m], grp.multiplicity});
    }
  }
  return rows;
}

TrigPoly random_trig_poly(std::mt19937_64& rng, int dim, ValueRank rank,
                          const std::vector<std::vector<double>>& classes, int terms) {
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> offset(-2, 2);
  std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);
  TrigPoly p(dim, rank);
  const int s0 = spatial_offset(dim);
  for (int t = 0; t < terms; ++t) {
    std::vector<double> freq(dim, 0.0);
    if (s0 == 1) freq[0] = 0.5 * offset(rng);
    const auto& cls = classes[pick(rng)];
    for (int i = 0; i < spatial_dim(dim); ++i) freq[s0 + i] = cls[i] + kTwoPi * offset(rng);
    Coeff c{};
    for (int k = 0; k < p.components(); ++k) c[k] = cplx(gauss(rng), gauss(rng));
    p.add_term(freq, c);
  }
  return p;
}

double coefficient_defect(const TrigPoly& u, const TrigPoly& v) {
  double d = 0.0;
  const TrigPoly diff = u - v;
  for (const auto& [key, c] : diff.terms()) {
    for (const cplx& x : c) d = std::max(d, std::abs(x));
  }
  return d;
}

GelfandDefects gelfand_identity_defects(const TrigPoly& u, const TrigPoly& v) {
  auto largest = [](const TrigPoly& p) {
    double m = 0.0;
    for (const auto& [key, c] : p.terms()) {
      for (const cplx& x : c) m = std::max(m, std::abs(x));
    }
    return m;
  };
  auto relative = [&](const TrigPoly& lhs, const TrigPoly& rhs) {
    const double scale = largest(rhs);
    return scale > 0.0 ? coefficient_defect(lhs, rhs) / scale : coefficient_defect(lhs, rhs);
  };
  GelfandDefects d;
  TrigPoly rebuilt(u.dim(), u.rank());
  for (const auto& xi : quasimomenta(u)) {
    const TrigPoly tu = gelfand_transform(u, xi);
    d.product = std::max(d.product, relative(gelfand_transform(trig_product(v, u), xi), trig_product(v, tu)));
    for (int j = 0; j < spatial_dim(u.dim()); ++j) {
      const int axis = spatial_offset(u.dim()) + j;
      const TrigPoly rhs = tu * (kI * xi[j]) + partial_derivative(tu, axis);
      d.derivative = std::max(d.derivative, relative(gelfand_transform(partial_derivative(u, axis), xi), rhs));
    }
    rebuilt = rebuilt + tu.shifted(xi);
  }
  d.decomposition = relative(rebuilt, u);
  return d;
}

json manifest(const std::string& command, const json& source, const json& tolerances) {
  return {{"command", command},
          {"config_hash", fnv1a_hex(source.dump())},
          {"config", source},
          {"versions",
           {{"hommax", kVersion},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
            {"fftw", std::string(fftw_version)},
            {"fmt", FMT_VERSION},
            {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                          NLOHMANN_JSON_VERSION_PATCH)}}},
          {"tolerances", tolerances}};
}

int run_homogenize(const ExperimentConfig& cfg, std::ostream& log) {
  const GalerkinTensor P(cfg.material.P, cfg.cell), Q(cfg.material.Q, cfg.cell);
  auto report = [](const Homogenization& h) {
    json res = json::array();
    for (const CellCorrector& c : h.correctors) res.push_back({{"residual", c.residual}, {"iterations", c.iterations}});
    return json{{"tensor", matrix_json(h.tensor)},
                {"energy_tensor", matrix_json(h.energy_tensor)},
                {"hermiticity_defect", h.hermiticity_defect},
                {"min_eigenvalue", h.min_eigenvalue},
                {"cell_problems", res}};
  };
  const Homogenization hp = homogenized_tensor(P), hq = homogenized_tensor(Q);
  const json out{{"N", cfg.cell.n}, {"P_H", report(hp)}, {"Q_H", report(hq)}};
  write_text(cfg.out / "homogenized.json", out.dump(2) + "\n");
  write_manifest(cfg.out, "homogenize", cfg.source, {{"cell_rtol", CellSolveOptions{}.rtol}});
  for (const auto& [name, h] : {std::pair{"P_H", &hp}, std::pair{"Q_H", &hq}}) {
    fmt::print(log, "{} =\n", name);
    for (int i = 0; i < 3; ++i) {
      fmt::print(log, "  {:>14.10f} {:>14.10f} {:>14.10f}\n", h->tensor(i, 0).real(), h->tensor(i, 1).real(),
                 h->tensor(i, 2).real());
    }
  }
  return kExitPass;
}

int run_bands(const BandsRequest& req, std::ostream& log) {
  if (req.xi.empty()) throw InputError("bands: empty xi set");
  const GridShape lattice(req.N, req.N, req.N);
  const BlochProblem problem(GalerkinTensor(req.material.P, lattice), GalerkinTensor(req.material.Q, lattice));
  std::vector<BlochSlice> slices(req.xi.size());
  parallel_for(req.xi.size(), req.threads, [&](std::size_t i) {
    slices[i] = bloch_eigensolve(problem, req.xi[i], req.modes_json ? ModeSelection::all() : ModeSelection::smallest(1));
  });
  std::vector<BandRow> rows;
  json modes = json::array();
  for (const BlochSlice& s : slices) {
    const auto r = band_rows(s, req.n_modes);
    rows.insert(rows.end(), r.begin(), r.end());
    if (!req.modes_json) continue;
    std::set<int> wanted;
    for (const BandRow& b : r) wanted.insert(b.band_index);
    const auto all = band_rows(s, std::nullopt);
    for (std::size_t g = 0; g < s.groups.size(); ++g) {
      const auto it = std::find_if(all.begin(), all.end(), [&](const BandRow& b) {
        return b.lambda == s.eigenvalues[s.groups[g].first];
      });
      if (it == all.end() || !wanted.contains(it->band_index)) continue;
      for (const BlochMode& m : s.modes_of(static_cast<int>(g))) {
        modes.push_back({{"xi", vec_json(m.xi)},
                         {"band_index", it->band_index},
                         {"lambda", m.lambda},
                         {"Phi", m.Phi.to_json()},
                         {"Psi", m.Psi.to_json()}});
      }
    }
  }
  write_text(req.out, bands_csv(rows));
  if (req.modes_json) write_text(*req.modes_json, modes.dump(1) + "\n");
  fmt::print(log, "{} rows over {} quasimomenta written to {}\n", rows.size(), req.xi.size(), req.out.string());
  return kExitPass;
}

int run_evolve(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.has_data()) throw InputError("evolve: config has no initial data");
  const GridShape& fine = cfg.fine_grid();
  const BlochProblem problem(GalerkinTensor(cfg.material.P, cfg.cell), GalerkinTensor(cfg.material.Q, cfg.cell));
  const auto times = uniform_nodes(cfg.T, cfg.nodes);
  const TwoScaleAnsatz ansatz = build_ansatz(problem, cfg.B0, cfg.E0, cfg.f, cfg.g, cfg.selection, times);
  write_text(cfg.out / "amplitudes.json", ansatz_json(ansatz).dump(1) + "\n");
  write_text(cfg.out / "amplitude_norms.csv", amplitude_norms_csv(ansatz));
  const double lam = std::max(ansatz.effective_lambda(), 1.0);

  std::vector<json> runs(cfg.inv_eps.size());
  parallel_for(cfg.inv_eps.size(), cfg.threads, [&](std::size_t i) {
    const int inv_eps = cfg.inv_eps[i];
    const double dt = cfg.dt ? *cfg.dt : 1.0 / (inv_eps * cfg.dt_factor * lam);
    const FineSolver solver(cfg.material.P, cfg.material.Q, inv_eps, fine);
    const FieldState init = fine_initial_state(cfg.B0, cfg.E0, inv_eps, fine);
    const HarmonicField f = fine_forcing(cfg.f, inv_eps, fine), g = fine_forcing(cfg.g, inv_eps, fine);
    if (!validate_divergence(solver, init, PeriodicField(fine, 1)).passed) {
      throw InputError("evolve: fine initial data violate the divergence constraints");
    }
    const FineTrajectory traj = solver.solve(init, f, g, times, {dt, 1e-11, 500});
    const std::string stem = fmt::format("eps_{}", inv_eps);
    write_text(cfg.out / ("energy_" + stem + ".csv"), energy_csv(traj.energy));
    write_trajectory(cfg.out, "trajectory_" + stem, traj.states);
    runs[i] = {{"inv_eps", inv_eps},
               {"dt", traj.dt_used},
               {"energy_drift", traj.energy.relative_drift()},
               {"balance_defect", traj.energy.balance_defect()},
               {"krylov_iterations", traj.total_iterations},
               {"warnings", traj.warnings}};
  });
  for (const json& r : runs) {
    fmt::print(log, "1/eps = {}: dt = {:.3e}, energy drift {:.3e}, balance defect {:.3e}\n", r["inv_eps"].get<int>(),
               r["dt"].get<double>(), r["energy_drift"].get<double>(), r["balance_defect"].get<double>());
  }
  write_text(cfg.out / "evolve.json", json{{"runs", runs}, {"tail_fraction", ansatz.tail_fraction}}.dump(2) + "\n");
  write_manifest(cfg.out, "evolve", cfg.source, {{"krylov_rtol", 1e-11}, {"divergence", 1e-8}});
  return kExitPass;
}

int run_corrector_study(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.has_data()) throw InputError("corrector-study: config has no initial data");
  StudyConfig sc;
  sc.P = cfg.material.P;
  sc.Q = cfg.material.Q;
  sc.cell = cfg.cell;
  sc.fine = cfg.fine_grid();
  sc.inv_eps = cfg.inv_eps;
  sc.B0 = cfg.B0;
  sc.E0 = cfg.E0;
  sc.f = cfg.f;
  sc.g = cfg.g;
  sc.T = cfg.T;
  sc.nodes = cfg.nodes;
  sc.dt_factor = cfg.dt_factor;
  sc.dt = cfg.dt;
  sc.selection = cfg.selection;
  sc.threads = cfg.threads;
  const StudyResult res = corrector_study(sc);

  write_text(cfg.out / "convergence.csv", convergence_csv(res.rows));
  for (const StudyRow& r : res.rows) {
    fmt::print(log, "1/eps = {}: two-scale B {:.4e} E {:.4e} | classical B {:.4e} E {:.4e} | gap {:.4e} | weak {:.4e}\n",
               r.inv_eps, r.err_two_scale_B, r.err_two_scale_E, r.err_classical_B, r.err_classical_E, r.energy_gap,
               r.err_weak_limit);
  }
  for (const std::string& w : res.warnings) fmt::print(log, "warning: {}\n", w);

  std::vector<Check> checks;
  for (auto [name, m] : {std::pair{"two-scale B error decreases", &StudyRow::err_two_scale_B},
                         std::pair{"two-scale E error decreases", &StudyRow::err_two_scale_E},
                         std::pair{"energy gap decreases", &StudyRow::energy_gap},
                         std::pair{"weak-limit error decreases", &StudyRow::err_weak_limit}}) {
    const auto v = column(res.rows, m);
    checks.push_back({name, strictly_decreasing(v), series(v)});
  }
  if (!cfg.expect.empty() && !res.rows.empty()) {
    const StudyRow& last = res.rows.back();
    const double rb = last.err_classical_B / last.err_two_scale_B, re = last.err_classical_E / last.err_two_scale_E;
    if (cfg.expect == "generic") {
      checks.push_back({"classical error at least twice the two-scale error", rb >= 2.0 && re >= 2.0,
                        fmt::format("ratios B {:.3f}, E {:.3f}", rb, re)});
    } else {
      checks.push_back({"classical and two-scale errors agree within 10%",
                        std::abs(rb - 1.0) <= 0.1 && std::abs(re - 1.0) <= 0.1,
                        fmt::format("ratios B {:.4f}, E {:.4f}", rb, re)});
    }
  }

  json rows = json::array();
  for (const StudyRow& r : res.rows) {
    rows.push_back({{"eps", 1.0 / r.inv_eps},
                    {"err_two_scale_B", r.err_two_scale_B},
                    {"err_two_scale_E", r.err_two_scale_E},
                    {"err_classical_B", r.err_classical_B},
                    {"err_classical_E", r.err_classical_E},
                    {"energy_gap", r.energy_gap},
                    {"tail_fraction", r.tail_fraction},
                    {"err_weak_limit", r.err_weak_limit},
                    {"energy_drift", r.energy_drift},
                    {"dt", r.dt},
                    {"seconds", r.seconds}});
  }
  json summary{{"rows", rows}, {"lambda_eff", res.lambda_eff}, {"warnings", res.warnings}};
  const int code = report_checks(checks, log, summary);
  write_text(cfg.out / "summary.json", summary.dump(2) + "\n");
  write_manifest(cfg.out, "corrector-study", cfg.source,
                 {{"krylov_rtol", sc.krylov_rtol}, {"low_pass_cutoff", sc.low_pass_cutoff}, {"dt_factor", sc.dt_factor},
                  {"generic_ratio", 2.0}, {"well_prepared_agreement", 0.1}});
  return code;
}

int run_check(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<Check> checks;
  auto add = [&](std::string name, bool ok, std::string detail) { checks.push_back({std::move(name), ok, std::move(detail)}); };

  std::mt19937_64 rng(cfg.seed);
  const std::vector<std::vector<double>> classes{{0.0, 0.0, 0.0}, {kPi * 0.5, -1.0, 0.25}, {0.7, -0.3, 0.1}};
  GelfandDefects worst;
  for (int trial = 0; trial < 20; ++trial) {
    const TrigPoly u = random_trig_poly(rng, 3, ValueRank::vector3, classes, 8);
    const TrigPoly v = random_trig_poly(rng, 3, ValueRank::scalar, {{0.0, 0.0, 0.0}}, 5);
    const GelfandDefects d = gelfand_identity_defects(u, v);
    worst = {std::max(worst.product, d.product), std::max(worst.derivative, d.derivative),
             std::max(worst.decomposition, d.decomposition)};
  }
  add("Gelfand identities", worst.product <= 1e-12 && worst.derivative <= 1e-12 && worst.decomposition <= 1e-12,
      fmt::format("product {:.1e}, derivative {:.1e}, decomposition {:.1e}", worst.product, worst.derivative,
                  worst.decomposition));

  const GalerkinTensor P(cfg.material.P, cfg.cell), Q(cfg.material.Q, cfg.cell);
  for (const auto& [name, m] : {std::pair{"P", &cfg.material.P}, std::pair{"Q", &cfg.material.Q}}) {
    const auto gate = m->inspect(cfg.cell);
    add(fmt::format("{} Hermitian and elliptic", name), gate.hermiticity_defect <= 1e-12 && gate.min_eigenvalue > 0.0,
        fmt::format("defect {:.1e}, eigenvalues [{:.4g}, {:.4g}]", gate.hermiticity_defect, gate.min_eigenvalue,
                    gate.max_eigenvalue));
  }
  const Homogenization hp = homogenized_tensor(P), hq = homogenized_tensor(Q);
  for (const auto& [name, h] : {std::pair{"P_H", &hp}, std::pair{"Q_H", &hq}}) {
    double res = 0.0;
    for (const CellCorrector& c : h->correctors) res = std::max(res, c.residual);
    add(fmt::format("{} Hermitian positive with converged cell problems", name),
        h->hermiticity_defect <= 1e-10 && h->min_eigenvalue > 0.0 && res <= 1e-8,
        fmt::format("defect {:.1e}, min eigenvalue {:.4g}, residual {:.1e}", h->hermiticity_defect, h->min_eigenvalue,
                    res));
  }

  const BlochProblem problem(P, Q);
  for (const Vec3& xi : cfg.xi) {
    const BlochSlice slice = bloch_eigensolve(problem, xi, cfg.selection);
    const std::string at = fmt::format("xi = ({:.4g}, {:.4g}, {:.4g})", xi(0), xi(1), xi(2));
    double eq = 0.0, con = 0.0, gram = 0.0;
    for (std::size_t a = 0; a < slice.modes.size(); ++a) {
      const ModeResiduals r = mode_residuals(problem, slice.modes[a]);
      eq = std::max(eq, r.equation);
      con = std::max(con, r.constraint);
      for (std::size_t b = a; b < slice.modes.size(); ++b) {
        const cplx ip = weighted_inner(slice.modes[a], slice.modes[b], P);
        gram = std::max(gram, std::abs(ip - (a == b ? 1.0 : 0.0)));
      }
    }
    add(fmt::format("modes solve the eigenproblem at {}", at), eq <= 1e-8 && con <= 1e-8,
        fmt::format("{} modes, equation {:.1e}, constraint {:.1e}", slice.modes.size(), eq, con));
    add(fmt::format("modes orthonormal at {}", at), gram <= 1e-10, fmt::format("Gram defect {:.1e}", gram));
    double skew = 0.0;
    for (std::size_t g = 0; g < slice.groups.size(); ++g) {
      const auto modes = slice.modes_of(static_cast<int>(g));
      if (!modes.empty()) skew = std::max(skew, skew_defect(transport_coefficients(modes)));
    }
    add(fmt::format("transport coefficients skew-Hermitian at {}", at), skew <= 1e-12,
        fmt::format("defect {:.1e}", skew));
    const SymmetryReport sym = spectrum_symmetry_check(problem, slice);
    if (sym.applicable) {
      add(fmt::format("spectrum symmetric under sign flip at {}", at), sym.passed,
          fmt::format("eigenvalue mismatch {:.1e}, angle {:.1e}", sym.eigenvalue_mismatch, sym.max_angle));
    }
    if (xi.isZero()) {
      const BandGroup* kernel = slice.group_near(0.0);
      const int dim = kernel ? kernel->multiplicity : 0;
      double angle = 1.0;
      if (kernel) {
        const int idx = static_cast<int>(kernel - slice.groups.data());
        angle = subspace_angle(slice.modes_of(idx), kernel_basis(P, Q, hp, hq), P);
      }
      add("kernel at xi = 0 has dimension 6 and matches the cell correctors", dim == 6 && angle <= 1e-8,
          fmt::format("dimension {}, angle {:.1e}", dim, angle));
    }
  }

  json summary;
  const int code = report_checks(checks, log, summary);
  write_text(cfg.out / "check.json", summary.dump(2) + "\n");
  write_manifest(cfg.out, "check", cfg.source,
                 {{"gelfand", 1e-12}, {"hermiticity", 1e-12}, {"residual", 1e-8}, {"orthonormality", 1e-10},
                  {"skew", 1e-12}, {"angle", 1e-8}});
  return code;
}

}  // namespace hommax
