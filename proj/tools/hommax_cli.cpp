// Command-line front end: homogenize, bands, evolve, corrector-study, check.
// Exit codes: 0 pass, 1 usage or input error, 2 numerical failure, 3 acceptance failure.

#include "hommax/app.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace {

using namespace hommax;

struct CommonOptions {
  std::string config;
  std::string out;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", o.threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? config_from_json(nlohmann::json::object(), {}) : load_config(o.config);
  if (!o.out.empty()) cfg.out = o.out;
  if (o.threads > 0) cfg.threads = o.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{fmt::format("hommax {}: two-scale homogenization of periodic Maxwell systems", kVersion)};
  app.require_subcommand(1);

  CommonOptions homogenize_opts, evolve_opts, study_opts, check_opts, bands_opts;
  auto* homogenize = app.add_subcommand("homogenize", "Homogenized tensors P_H, Q_H from the cell problems");
  add_common(homogenize, homogenize_opts);
  auto* evolve = app.add_subcommand("evolve", "Fine-scale solves and amplitude trajectories for each eps");
  add_common(evolve, evolve_opts);
  auto* study = app.add_subcommand("corrector-study", "Two-scale versus classical corrector eps-sweep");
  add_common(study, study_opts);
  auto* check = app.add_subcommand("check", "Invariant suite on the configured material");
  add_common(check, check_opts);

  auto* bands = app.add_subcommand("bands", "Bloch eigenvalues along a quasimomentum set");
  add_common(bands, bands_opts);
  std::string material_file, xi_spec;
  std::optional<int> n_modes, N;
  std::string modes_json;
  bands->add_option("--material", material_file, "Material pair {\"P\": ..., \"Q\": ...} (JSON)")
      ->check(CLI::ExistingFile);
  bands->add_option("--xi-path", xi_spec, "Preset (gamma, gamma-x, acceptance) or file of triples");
  bands->add_option("--nmodes", n_modes, "Eigenvalues per quasimomentum, completed to whole eigenspaces")
      ->check(CLI::PositiveNumber);
  bands->add_option("--N", N, "Plane waves per axis")->check(CLI::PositiveNumber);
  bands->add_option("--modes-json", modes_json, "Also dump the modes of the reported eigenspaces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitUsage;
  }

  const bool checking = check->parsed();
  try {
    if (homogenize->parsed()) return run_homogenize(resolve_config(homogenize_opts), std::cout);
    if (evolve->parsed()) return run_evolve(resolve_config(evolve_opts), std::cout);
    if (study->parsed()) return run_corrector_study(resolve_config(study_opts), std::cout);
    if (checking) return run_check(resolve_config(check_opts), std::cout);

    CommonOptions o = bands_opts;
    const std::string out = o.out;
    o.out.clear();
    const ExperimentConfig cfg = resolve_config(o);
    BandsRequest req{cfg.material, cfg.xi};
    if (!material_file.empty()) req.material = material_pair_from_json(read_json(material_file), {});
    if (!xi_spec.empty()) req.xi = xi_path(xi_spec);
    req.N = N ? *N : cfg.cell[0];
    req.n_modes = n_modes ? n_modes : cfg.selection.n_modes;
    req.out = out.empty() ? cfg.out / "bands.csv" : std::filesystem::path(out);
    if (!modes_json.empty()) req.modes_json = modes_json;
    req.threads = cfg.threads;
    return run_bands(req, std::cout);
  } catch (const MaterialError& e) {
    // The ellipticity gate is one of the checked invariants.
    std::cerr << (checking ? "FAIL material gate: " : "error: ") << e.what() << '\n';
    return checking ? kExitAcceptance : kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
