#include "bvam/config.hpp"
#include "bvam/errors.hpp"
#include "bvam/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace bvam;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bvam_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("numbers round-trip through text exactly") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("CSV write and read") {
  const auto path = scratch("table.csv");
  CsvTable t;
  t.header = {"x", "label", "y"};
  t.rows = {{format_number(1.0 / 3.0), "plain", format_number(-2.5e-17)},
            {format_number(M_PI), "has,comma", ""},
            {"0", "quote \"inside\"", format_number(1e300)}};
  write_csv(path, t);
  const auto back = read_csv(path);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  const auto x = back.numbers("x");
  CHECK(std::abs(x[0] - 1.0 / 3.0) <= 1e-15);
  CHECK(x[1] == M_PI);
  CHECK(std::isnan(back.numbers("y")[1]));
  CHECK_THROWS_AS(back.column("missing"), Error);
  CHECK_THROWS_AS(back.numbers("label"), Error);

  const auto text = slurp(path);
  CHECK(text.rfind("x,label,y\r\n", 0) == 0);
  CHECK(text.find("\"has,comma\"") != std::string::npos);
  CHECK(text.find("\"quote \"\"inside\"\"\"") != std::string::npos);

  t.rows.push_back({"1"});
  CHECK_THROWS_AS(write_csv(scratch("ragged.csv"), t), Error);
}

TEST_CASE("state export is lossless") {
  SpectralGrid g(16, 5.0);
  FieldPair s = FieldPair::zeros(16);
  for (int j = 0; j < 16; ++j) {
    s.u1[j] = std::sin(0.37 * j) / 3.0;
    s.u2[j] = std::exp(-0.1 * j);
  }
  const auto path = scratch("state.csv");
  export_state(g, s, path);
  const auto t = read_csv(path);
  REQUIRE(t.rows.size() == 16);
  const auto x = t.numbers("x");
  const auto u1 = t.numbers("u1");
  const auto u2 = t.numbers("u2");
  for (int j = 0; j < 16; ++j) {
    CHECK(x[j] == g.points()[j]);
    CHECK(u1[j] == s.u1[j]);
    CHECK(u2[j] == s.u2[j]);
  }
}

TEST_CASE("equilibrium branch export marks the flagged row") {
  EquilibriumBranch b;
  b.regime = make_regime(Regime::cross);
  for (int k = 0; k < 5; ++k) {
    EquilibriumPoint p;
    p.C = -0.5 - 0.1 * k;
    p.state = FieldPair::zeros(4);
    p.energy = 0.01 * k;
    p.stability = classify_spectrum({{k >= 3 ? 0.01 : -0.01, 2.0}, {k >= 3 ? 0.01 : -0.01, -2.0}});
    p.event = k == 3 ? BranchEvent::hopf : BranchEvent::none;
    b.points.push_back(p);
  }
  b.hopf_index = 3;
  const auto path = scratch("branch.csv");
  export_branch(b, path);
  const auto t = read_csv(path);
  CHECK(t.header == std::vector<std::string>{"C", "E", "max_real_part", "leading_re", "leading_im", "stable",
                                             "residual_norm", "iterations", "event"});
  REQUIRE(t.rows.size() == 5);
  const auto ev = t.column("event");
  for (std::size_t k = 0; k < 5; ++k) CHECK(t.rows[k][ev] == (k == 3 ? "hopf" : ""));
  CHECK(t.numbers("C")[4] == -0.5 - 0.4);
}

TEST_CASE("orbit branch export leaves missing Floquet cells empty") {
  OrbitBranch b;
  b.regime = make_regime(Regime::linear);
  for (int k = 0; k < 3; ++k) {
    OrbitPoint p;
    p.C = -1.0 - 0.01 * k;
    p.orbit.period = 3.0 + 0.1 * k;
    p.orbit.anchor = FieldPair::zeros(4);
    if (k != 1) {
      p.has_monodromy = true;
      p.multipliers = {{1.0, 0.0}, {-1.01, 0.0}, {0.2, 0.1}, {0.2, -0.1}, {0.01, 0.0}};
      p.bifurcation.critical_multiplier = {-1.01, 0.0};
    }
    p.event = k == 2 ? BranchEvent::period_doubling : BranchEvent::none;
    b.points.push_back(p);
  }
  const auto path = scratch("orbit_branch.csv");
  export_branch(b, path);
  const auto t = read_csv(path);
  CHECK(t.column("T") == 1);
  CHECK(t.column("multiplier_im_3") + 2 == t.header.size());
  CHECK(t.rows[1][t.column("multiplier_re_0")].empty());
  CHECK(t.numbers("multiplier_re_1")[2] == -1.01);
  CHECK(t.rows[2][t.column("event")] == "period_doubling");
  CHECK(t.numbers("T")[2] == 3.2);
}

TEST_CASE("attractor export keeps t_norm monotone in [0, 1]") {
  std::vector<AttractorSample> s(11);
  for (int i = 0; i <= 10; ++i) {
    s[i].t = 100 + i;
    s[i].t_norm = i / 10.0;
    s[i].dEdt = std::numeric_limits<double>::quiet_NaN();
  }
  const auto path = scratch("attr.csv");
  export_attractor(s, path);
  const auto t = read_csv(path);
  const auto tn = t.numbers("t_norm");
  CHECK(tn.front() == 0.0);
  CHECK(tn.back() == 1.0);
  for (std::size_t i = 1; i < tn.size(); ++i) CHECK(tn[i] > tn[i - 1]);
  CHECK(std::isnan(t.numbers("dEdt")[0]));
}

TEST_CASE("metadata sidecar") {
  const auto data = scratch("meta_target.csv");
  RunMetadata m;
  m.config = to_json(parse_config("regime = self_u1"));
  m.grid = describe_grid(SpectralGrid(32, 5.0));
  m.command_line = "bvam equilibrium --regime self_u1";
  const auto path = write_metadata(data, m);
  CHECK(path.filename() == "meta_target.meta.json");
  const auto j = nlohmann::json::parse(slurp(path));
  CHECK(j.at("config").at("diffusion").at("d11") == 0.07);
  CHECK(j.at("grid").at("N") == 32);
  CHECK(j.at("grid").at("center_index") == 16);
  CHECK(j.at("versions").contains("bvam"));
  CHECK(j.at("versions").contains("eigen"));
  CHECK(j.at("versions").contains("fftw"));
  CHECK(j.at("command_line") == m.command_line);
  // Deterministic: writing twice gives the same bytes.
  const auto first = slurp(path);
  write_metadata(data, m);
  CHECK(slurp(path) == first);
}

TEST_CASE("trajectory export") {
  Trajectory tr;
  tr.times = {0.0, 0.5};
  tr.states = {FieldPair::zeros(4), FieldPair::zeros(4)};
  tr.states[1].u2[3] = 0.25;
  tr.energies = {0.0, 0.1};
  const auto path = scratch("traj.csv");
  export_trajectory(tr, path);
  const auto t = read_csv(path);
  CHECK(t.header.size() == 2 + 8);
  CHECK(t.header[0] == "t");
  CHECK(t.header[1] == "E");
  CHECK(t.numbers(t.header.back())[1] == 0.25);
}
