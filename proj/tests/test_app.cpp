#include "doctest.h"

#include "hommax/app.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace hommax;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = fs::path(HOMMAX_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hommax_test_app" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fnv1a matches the published 64-bit test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("matrix json round trip is exact") {
  Mat3c m;
  m << cplx(1, 2), cplx(0.1, 0), 3, 4, cplx(5, -1e-300), 6, 7, 8, cplx(9, 0.25);
  CHECK(matrix_from_json(json::parse(matrix_json(m).dump())) == m);
}

TEST_CASE("config parsing fills defaults and rejects malformed input") {
  const ExperimentConfig d = config_from_json(json::object(), {});
  CHECK(d.inv_eps == std::vector<int>{2, 4, 8});
  CHECK(d.xi.size() == 1);
  CHECK(d.threads == 1);
  CHECK_THROWS_AS(d.fine_grid(), InputError);

  const ExperimentConfig c =
      config_from_json(json{{"N", {16, 1, 1}}, {"eps", {0.5, 0.25}}, {"xi", "gamma-x"}, {"nmodes", 4}}, {});
  CHECK(c.cell == GridShape(16, 1, 1));
  CHECK(c.inv_eps == std::vector<int>{2, 4});
  CHECK(c.xi.size() == 11);
  CHECK(c.xi.back()(0) == doctest::Approx(kPi));
  CHECK(c.selection.n_modes == 4);

  CHECK_THROWS_AS(config_from_json(json{{"epsilon", {0.5}}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"eps", {0.3}}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"eps", json::array()}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"xi", json::array()}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"nmodes", 4}, {"lambda_max", 3.0}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"T", -1.0}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"expect", "both"}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"N", "eight"}}, {}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"data", {{"preset", "nothing"}}}}, {}), InputError);
}

TEST_CASE("shipped study config resolves its material file and data preset") {
  const ExperimentConfig c = load_config(kConfigs / "study-generic.json");
  CHECK(c.fine_grid() == GridShape(256, 1, 1));
  CHECK(c.expect == "generic");
  CHECK(c.has_data());
  CHECK_FALSE(c.material.Q.is_constant());
  CHECK(c.material.P.is_constant());
}

TEST_CASE("xi paths from presets and files") {
  CHECK(xi_path("gamma").size() == 1);
  CHECK(xi_path("acceptance").size() == 3);
  const fs::path dir = scratch("xi");
  write_text(dir / "path.txt", "# header\n0 0 0\n0.5 -0.25 1\n");
  write_text(dir / "path.json", "[[0.1, 0.2, 0.3]]");
  const auto t = xi_path("path.txt", dir);
  REQUIRE(t.size() == 2);
  CHECK(t[1] == Vec3(0.5, -0.25, 1.0));
  CHECK(xi_path("path.json", dir).front() == Vec3(0.1, 0.2, 0.3));
  write_text(dir / "bad.txt", "0 1\n");
  CHECK_THROWS_AS(xi_path("bad.txt", dir), InputError);
  CHECK_THROWS_AS(xi_path("no-such-path"), InputError);
}

TEST_CASE("band rows rank eigenspaces by modulus with the kernel first") {
  const GridShape lattice(4, 2, 2);
  const BlochProblem problem(GalerkinTensor(MaterialTensor::identity(), lattice),
                             GalerkinTensor(MaterialTensor::laminate(), lattice));
  const BlochSlice slice = bloch_eigensolve(problem, Vec3::Zero(), ModeSelection::smallest(1));
  const auto rows = band_rows(slice, std::nullopt);
  CHECK(rows.size() == slice.eigenvalues.size());
  for (int i = 0; i < 6; ++i) {
    CHECK(rows[i].band_index == 0);
    CHECK(rows[i].multiplicity == 6);
    CHECK(std::abs(rows[i].lambda) < 1e-10);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].band_index >= rows[i - 1].band_index);
    CHECK(std::abs(rows[i].lambda) >= std::abs(rows[i - 1].lambda) - degeneracy_tolerance(rows[i].lambda));
  }
  const auto cut = band_rows(slice, 8);
  CHECK(cut.size() >= 8);
  CHECK(cut.back().band_index == cut[7].band_index);
  CHECK(cut.size() == 6 + static_cast<std::size_t>(cut.back().multiplicity));
}

TEST_CASE("bands output is byte-identical across runs and thread counts") {
  const fs::path dir = scratch("bands");
  BandsRequest req{{MaterialTensor::identity(), MaterialTensor::laminate()}, xi_path("acceptance")};
  req.N = 4;
  req.n_modes = 10;
  std::ostringstream log;
  req.out = dir / "one.csv";
  CHECK(run_bands(req, log) == kExitPass);
  req.out = dir / "two.csv";
  req.threads = 3;
  CHECK(run_bands(req, log) == kExitPass);
  const std::string one = slurp(dir / "one.csv");
  CHECK(one == slurp(dir / "two.csv"));
  CHECK(one.find(",-0,") == std::string::npos);

  req.xi.clear();
  CHECK_THROWS_AS(run_bands(req, log), InputError);
}

TEST_CASE("trajectory files round trip") {
  const GridShape g(4, 2, 6);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<FieldState> states;
  for (int n = 0; n < 2; ++n) {
    FieldState s{0.5 * n, PeriodicField(g, 3), PeriodicField(g, 3), 4};
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        s.B.at(c, i) = {nd(rng), nd(rng)};
        s.E.at(c, i) = {nd(rng), nd(rng)};
      }
    }
    states.push_back(std::move(s));
  }
  const fs::path dir = scratch("trajectory");
  const json index = write_trajectory(dir, "traj", states);
  CHECK(fs::file_size(dir / "traj.bin") == 2 * (32 + g.size() * 6 * 16));
  CHECK(index.at("inv_eps") == 4);
  const auto back = read_trajectory(dir / "traj.json");
  REQUIRE(back.size() == 2);
  for (int n = 0; n < 2; ++n) {
    CHECK(back[n].t == states[n].t);
    CHECK(back[n].grid() == g);
    CHECK((back[n].B.coeffs() - states[n].B.coeffs()).norm() < 1e-13);
    CHECK((back[n].E.coeffs() - states[n].E.coeffs()).norm() < 1e-13);
  }
}

TEST_CASE("homogenize writes tensors and a manifest") {
  ExperimentConfig c = load_config(kConfigs / "laminate.json");
  c.out = scratch("homogenize");
  std::ostringstream log;
  CHECK(run_homogenize(c, log) == kExitPass);
  const json h = read_json(c.out / "homogenized.json");
  const Mat3c q = matrix_from_json(h.at("Q_H").at("tensor"));
  CHECK(q(0, 0).real() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
  CHECK(q(1, 1).real() == doctest::Approx(2.0).epsilon(1e-12));
  const json m = read_json(c.out / "manifest.json");
  CHECK(m.at("command") == "homogenize");
  CHECK(m.at("config_hash") == fnv1a_hex(c.source.dump()));
}

TEST_CASE("check passes on vacuum and rejects a non-Hermitian material") {
  ExperimentConfig c = config_from_json(json{{"N", 4}, {"xi", "gamma"}, {"nmodes", 6}}, {});
  c.out = scratch("check");
  std::ostringstream log;
  CHECK(run_check(c, log) == kExitPass);
  CHECK(read_json(c.out / "check.json").at("passed") == true);

  CHECK_THROWS_AS(load_config(kConfigs / "broken-hermiticity.json"), MaterialError);
}
