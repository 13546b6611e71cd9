#pragma once

// Experiment configuration and the subcommands of the command-line front end.
// Every run writes its results and a manifest.json into the output directory.

#include "hommax/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <random>

namespace hommax {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitPass = 0, kExitUsage = 1, kExitNumerical = 2, kExitAcceptance = 3 };

struct MaterialPair {
  MaterialTensor P;
  MaterialTensor Q;
};

// {"P": <tensor or path>, "Q": <tensor or path>}; paths resolve against base.
MaterialPair material_pair_from_json(const nlohmann::json& j, const std::filesystem::path& base);

// Named data sets: "laminate-generic", "laminate-well-prepared".
std::pair<TwoScaleField, TwoScaleField> data_preset(const std::string& name);

struct ExperimentConfig {
  nlohmann::json source;  // normalized input, hashed into the manifest
  MaterialPair material{MaterialTensor::identity(), MaterialTensor::identity()};
  GridShape cell{8, 8, 8};
  ModeSelection selection = ModeSelection::all();
  std::vector<Vec3> xi{Vec3::Zero()};
  TwoScaleField B0, E0;
  ForcingField f, g;
  std::vector<int> inv_eps{2, 4, 8};
  double T = 1.0;
  int nodes = 21;
  double dt_factor = 100.0;
  std::optional<double> dt;
  std::optional<GridShape> fine;
  std::string expect;  // "", "generic" or "well-prepared": extra study checks
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  bool has_data() const { return !B0.empty() || !E0.empty(); }
  const GridShape& fine_grid() const;  // throws InputError when absent
};

ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base);
ExperimentConfig load_config(const std::filesystem::path& file);

// "gamma", "gamma-x" (11 points from 0 to (pi, 0, 0)), "acceptance"
// ({0, (pi, 0, 0), (0.7, -0.3, 0.1)}), or a file: a JSON array of triples or
// whitespace-separated triples, one per line.
std::vector<Vec3> xi_path(const std::string& name, const std::filesystem::path& base = {});

// One row per eigenvalue counted with multiplicity. Eigenspaces are ranked by
// |lambda| (negative first on ties), so band_index 0 at xi = 0 is the kernel.
// With n_modes the rows stop after the eigenspace that reaches n_modes.
std::vector<BandRow> band_rows(const BlochSlice& slice, std::optional<int> n_modes);

// Random polynomial with quasimomentum classes from `classes`, lattice offsets
// in [-2, 2]^d and Gaussian coefficients.
TrigPoly random_trig_poly(std::mt19937_64& rng, int dim, ValueRank rank,
                          const std::vector<std::vector<double>>& classes, int terms);

// Largest coefficient defect of the Gelfand identities on (u, v), v lattice-periodic,
// relative to the largest coefficient of the right-hand side:
// T(v u) = v T(u), T(d_j u) = (d_j + i xi_j) T(u), u = sum_xi exp(i xi.x) T_xi(u).
struct GelfandDefects {
  double product = 0.0;
  double derivative = 0.0;
  double decomposition = 0.0;
};
GelfandDefects gelfand_identity_defects(const TrigPoly& u, const TrigPoly& v);

// Maximum coefficient modulus of u - v.
double coefficient_defect(const TrigPoly& u, const TrigPoly& v);

nlohmann::json manifest(const std::string& command, const nlohmann::json& source, const nlohmann::json& tolerances);

struct BandsRequest {
  MaterialPair material;
  std::vector<Vec3> xi;
  int N = 8;
  std::optional<int> n_modes;
  std::filesystem::path out = "bands.csv";
  std::optional<std::filesystem::path> modes_json;
  int threads = 1;
};

int run_homogenize(const ExperimentConfig& cfg, std::ostream& log);
int run_bands(const BandsRequest& req, std::ostream& log);
int run_evolve(const ExperimentConfig& cfg, std::ostream& log);
int run_corrector_study(const ExperimentConfig& cfg, std::ostream& log);
int run_check(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace hommax
