#include "hommax/io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hommax {

namespace {

static_assert(std::endian::native == std::endian::little, "binary trajectories assume a little-endian host");

// Adding 0.0 maps -0 to 0, so sign-flipped zeros print identically.
std::string num(double v) { return fmt::format("{:.17g}", v + 0.0); }

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InputError("trajectory file truncated");
  return v;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a_hex(std::string_view bytes) { return fmt::format("{:016x}", fnv1a(bytes)); }

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError(fmt::format("cannot write {}", path.string()));
  os << content;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError(fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: malformed JSON ({})", path.string(), e.what()));
  }
}

nlohmann::json matrix_json(const Mat3c& m) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    re.push_back({m(i, 0).real(), m(i, 1).real(), m(i, 2).real()});
    im.push_back({m(i, 0).imag(), m(i, 1).imag(), m(i, 2).imag()});
  }
  return {{"re", re}, {"im", im}};
}

Mat3c matrix_from_json(const nlohmann::json& j) {
  try {
    Mat3c m;
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) {
        const double im = j.contains("im") ? j.at("im").at(i).at(k).get<double>() : 0.0;
        m(i, k) = cplx(j.at("re").at(i).at(k).get<double>(), im);
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("3x3 matrix JSON: {}", e.what()));
  }
}

std::string bands_csv(const std::vector<BandRow>& rows) {
  std::string s = "xi1,xi2,xi3,band_index,lambda,multiplicity\n";
  for (const BandRow& r : rows) {
    s += fmt::format("{},{},{},{},{},{}\n", num(r.xi(0)), num(r.xi(1)), num(r.xi(2)), r.band_index, num(r.lambda),
                     r.multiplicity);
  }
  return s;
}

std::string energy_csv(const EnergyReport& e) {
  std::string s = "t,H,divB,divPE_minus_rho\n";
  for (std::size_t n = 0; n < e.t.size(); ++n) {
    s += fmt::format("{},{},{},{}\n", num(e.t[n]), num(e.H[n]), num(e.divB[n]), num(e.divPE_minus_rho[n]));
  }
  return s;
}

std::string convergence_csv(const std::vector<StudyRow>& rows) {
  std::string s = "eps,err_two_scale_B,err_two_scale_E,err_classical_B,err_classical_E,energy_gap,tail_fraction\n";
  for (const StudyRow& r : rows) {
    s += fmt::format("{},{},{},{},{},{},{}\n", num(1.0 / r.inv_eps), num(r.err_two_scale_B), num(r.err_two_scale_E),
                     num(r.err_classical_B), num(r.err_classical_E), num(r.energy_gap), num(r.tail_fraction));
  }
  return s;
}

std::string amplitude_norms_csv(const TwoScaleAnsatz& ansatz) {
  std::string s = "xi1,xi2,xi3,band_index,lambda,t,norm2\n";
  for (std::size_t k = 0; k < ansatz.systems.size(); ++k) {
    const AmplitudeSystem& sys = ansatz.systems[k];
    for (std::size_t n = 0; n < ansatz.times.size(); ++n) {
      double e = 0.0;
      for (const auto& [kappa, series] : ansatz.solutions[k].values) e += series[n].squaredNorm();
      s += fmt::format("{},{},{},{},{},{},{}\n", num(sys.xi(0)), num(sys.xi(1)), num(sys.xi(2)), sys.band_index,
                       num(sys.lambda), num(ansatz.times[n]), num(e));
    }
  }
  return s;
}

nlohmann::json ansatz_json(const TwoScaleAnsatz& ansatz) {
  nlohmann::json systems = nlohmann::json::array();
  for (std::size_t k = 0; k < ansatz.systems.size(); ++k) {
    const AmplitudeSystem& sys = ansatz.systems[k];
    nlohmann::json b = nlohmann::json::array();
    for (const auto& row : sys.b) {
      nlohmann::json jr = nlohmann::json::array();
      for (const Vec3c& v : row) {
        jr.push_back({{"re", {v(0).real(), v(1).real(), v(2).real()}}, {"im", {v(0).imag(), v(1).imag(), v(2).imag()}}});
      }
      b.push_back(jr);
    }
    nlohmann::json amps = nlohmann::json::array();
    for (const auto& [kappa, series] : ansatz.solutions[k].values) {
      nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
      for (const VectorXc& a : series) {
        std::vector<double> r(a.size()), i(a.size());
        for (Eigen::Index l = 0; l < a.size(); ++l) {
          r[l] = a(l).real();
          i[l] = a(l).imag();
        }
        re.push_back(r);
        im.push_back(i);
      }
      amps.push_back({{"kappa", kappa}, {"re", re}, {"im", im}});
    }
    systems.push_back({{"xi", {sys.xi(0), sys.xi(1), sys.xi(2)}},
                       {"band_index", sys.band_index},
                       {"lambda", sys.lambda},
                       {"multiplicity", sys.multiplicity()},
                       {"b", b},
                       {"amplitudes", amps}});
  }
  return {{"times", ansatz.times}, {"tail_fraction", ansatz.tail_fraction}, {"systems", systems}};
}

nlohmann::json write_trajectory(const std::filesystem::path& dir, const std::string& stem,
                                const std::vector<FieldState>& states) {
  std::filesystem::create_directories(dir);
  const std::string file = stem + ".bin";
  std::ofstream os(dir / file, std::ios::binary);
  if (!os) throw InputError(fmt::format("cannot write {}", (dir / file).string()));
  nlohmann::json snaps = nlohmann::json::array();
  for (const FieldState& s : states) {
    snaps.push_back({{"t", s.t}, {"offset", static_cast<std::int64_t>(os.tellp())}});
    const GridShape& g = s.grid();
    for (int a = 0; a < 3; ++a) put<std::int64_t>(os, g[a]);
    put<double>(os, s.t);
    std::array<std::vector<cplx>, 6> v;
    for (int c = 0; c < 3; ++c) {
      v[c] = s.B.sample(c, g);
      v[3 + c] = s.E.sample(c, g);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (int c = 0; c < 6; ++c) {
        put<double>(os, v[c][i].real());
        put<double>(os, v[c][i].imag());
      }
    }
  }
  nlohmann::json index = {
      {"file", file},
      {"layout", "per snapshot: int64 n1, n2, n3; float64 t; then per grid point (row-major, axis 0 slowest) "
                 "re/im float64 pairs of B1 B2 B3 E1 E2 E3; little-endian"},
      {"inv_eps", states.empty() ? 1 : states.front().inv_eps},
      {"snapshots", snaps}};
  write_text(dir / (stem + ".json"), index.dump(2));
  return index;
}

std::vector<FieldState> read_trajectory(const std::filesystem::path& index_file) {
  const nlohmann::json index = read_json(index_file);
  const auto bin = index_file.parent_path() / index.at("file").get<std::string>();
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw InputError(fmt::format("cannot open {}", bin.string()));
  std::vector<FieldState> out;
  for (const auto& snap : index.at("snapshots")) {
    is.seekg(snap.at("offset").get<std::int64_t>());
    GridShape g;
    for (int a = 0; a < 3; ++a) g.n[a] = static_cast<int>(get<std::int64_t>(is));
    const double t = get<double>(is);
    std::array<std::vector<cplx>, 6> v;
    for (auto& c : v) c.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (int c = 0; c < 6; ++c) {
        const double re = get<double>(is);
        v[c][i] = cplx(re, get<double>(is));
      }
    }
    const std::array<std::vector<cplx>, 3> b{v[0], v[1], v[2]}, e{v[3], v[4], v[5]};
    out.push_back({t, PeriodicField::from_samples(g, b), PeriodicField::from_samples(g, e),
                   index.value("inv_eps", 1)});
  }
  return out;
}

}  // namespace hommax
