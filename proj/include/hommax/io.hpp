#pragma once

// Output formats. CSV numbers use 17 significant digits so identical runs
// produce byte-identical files.

#include "hommax/corrector.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace hommax {

std::uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);

void write_text(const std::filesystem::path& path, std::string_view content);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json matrix_json(const Mat3c& m);  // {"re": [[3]x3], "im": [[3]x3]}
Mat3c matrix_from_json(const nlohmann::json& j);

struct BandRow {
  Vec3 xi;
  int band_index = 0;
  double lambda = 0.0;
  int multiplicity = 0;
};
std::string bands_csv(const std::vector<BandRow>& rows);

std::string energy_csv(const EnergyReport& e);
std::string convergence_csv(const std::vector<StudyRow>& rows);

// Per eigenspace: sum over kappa of |a|^2 at every node.
std::string amplitude_norms_csv(const TwoScaleAnsatz& ansatz);
nlohmann::json ansatz_json(const TwoScaleAnsatz& ansatz);

// Snapshots as a flat little-endian binary file: per snapshot a header of three
// int64 grid sizes and a float64 time, then for every grid point (row-major)
// the interleaved (re, im) float64 values of B1, B2, B3, E1, E2, E3. The JSON
// index records offsets and the layout.
nlohmann::json write_trajectory(const std::filesystem::path& dir, const std::string& stem,
                                const std::vector<FieldState>& states);
std::vector<FieldState> read_trajectory(const std::filesystem::path& index_file);

}  // namespace hommax
