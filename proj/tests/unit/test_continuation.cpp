#include "bvam/continuation.hpp"
#include "bvam/errors.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>

using namespace bvam;

namespace {

constexpr int kN = 32;

struct Sweep {
  DiffusionRegime regime = make_regime(Regime::linear);
  SpectralGrid grid{kN, 5.0};
  ContinuationSettings settings;
  EquilibriumBranch branch;

  Sweep() {
    settings.C_start = -0.5;
    settings.C_end = -1.3;
    settings.steps = 40;
    branch = continue_equilibria(regime, grid, cosine_guess(grid, 0.5, 0.5, 3, 3), settings);
  }
};

const Sweep& sweep() {
  static const Sweep s;
  return s;
}

SeedSettings seed_settings() {
  SeedSettings s;
  s.orbit.dt = 5e-4;
  return s;
}

}  // namespace

TEST_CASE("equilibrium sweep finds exactly one Hopf point") {
  const auto& s = sweep();
  const auto& b = s.branch;
  REQUIRE_FALSE(b.truncated);
  REQUIRE(b.points.size() == 41);
  for (std::size_t k = 0; k < b.points.size(); ++k) {
    CHECK(b.points[k].C == doctest::Approx(-0.5 - 0.02 * k).epsilon(1e-12));
    CHECK(b.points[k].residual_norm <= 1e-10);
  }
  REQUIRE(b.hopf_index > 0);
  CHECK(b.stability_changes == 1);
  CHECK(b.points[b.hopf_index].event == BranchEvent::hopf);
  CHECK(b.points[b.hopf_index - 1].stability.stable);
  CHECK_FALSE(b.points[b.hopf_index].stability.stable);
  CHECK(b.points[b.hopf_index].stability.hopf_candidate);
  int events = 0;
  for (const auto& p : b.points) events += p.event != BranchEvent::none;
  CHECK(events == 1);
}

TEST_CASE("seeding from a stable equilibrium reports no periodicity") {
  const auto& s = sweep();
  try {
    hopf_seed_orbit(s.regime, s.grid, s.branch.points.front(), seed_settings());
    FAIL("expected no periodicity");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("no periodicity") != std::string::npos);
  }
}

TEST_CASE("saturation on a decaying trajectory reports no periodicity") {
  auto p = make_regime(Regime::linear, -0.5).parameters;
  SpectralGrid g(16, p.Lx);
  FieldPair start = FieldPair::zeros(16);
  start.u1.array() += 1e-3;  // the homogeneous mode is damped at this C
  CHECK_THROWS_AS(saturate(p, g, start, seed_settings()), ConvergenceError);
}

TEST_CASE("Hopf seed and a short orbit branch") {
  const auto& s = sweep();
  const auto& b = s.branch;
  REQUIRE(b.hopf_index > 0);
  const std::size_t at = std::min<std::size_t>(b.hopf_index + 5, b.points.size() - 1);
  const auto orbit = hopf_seed_orbit(s.regime, s.grid, b.points[at], seed_settings());
  REQUIRE(orbit.converged);
  CHECK(std::abs(orbit.period - 3.0) < 1.5);
  // The orbit is a genuine oscillation, not the equilibrium it left.
  CHECK((orbit.anchor.stacked() - b.points[at].state.stacked()).norm() > 1e-3);

  OrbitContinuationSettings oc;
  oc.delta_C = -0.01;
  oc.max_steps = 3;
  oc.orbit.dt = 5e-4;
  oc.stop_at_instability = false;
  auto regime = s.regime;
  regime.parameters.C = b.points[at].C;
  const auto branch = continue_orbits(regime, s.grid, orbit, oc);
  REQUIRE(branch.points.size() >= 3);
  CHECK_FALSE(branch.truncated);
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    const auto& pt = branch.points[i];
    CHECK(pt.orbit.converged);
    CHECK(pt.has_monodromy);
    CHECK(pt.C == doctest::Approx(b.points[at].C - 0.01 * i).epsilon(1e-12));
    CHECK(std::abs(pt.multipliers[pt.trivial_index] - 1.0) < 1e-2);
    if (i > 0) {
      const double prev = branch.points[i - 1].orbit.period;
      CHECK(std::abs(pt.orbit.period - prev) < 0.1 * prev);
    }
  }
}

TEST_CASE("continuation settings are validated") {
  const auto& s = sweep();
  ContinuationSettings bad;
  bad.steps = 0;
  CHECK_THROWS_AS(continue_equilibria(s.regime, s.grid, FieldPair::zeros(kN), bad), ConfigError);
  PeriodicOrbit unconverged;
  unconverged.anchor = FieldPair::zeros(kN);
  CHECK_THROWS_AS(continue_orbits(s.regime, s.grid, unconverged, OrbitContinuationSettings{}), ConfigError);
}

TEST_CASE("event labels") {
  CHECK(to_string(BranchEvent::none).empty());
  CHECK(to_string(BranchEvent::hopf) == "hopf");
  CHECK(to_string(BranchEvent::period_doubling) == "period_doubling");
  CHECK(event_from(OrbitBifurcationKind::fold) == BranchEvent::fold);
  CHECK(event_from(OrbitBifurcationKind::none) == BranchEvent::none);
}

TEST_CASE("concurrent driver visits every index once") {
  std::atomic<int> sum{0};
  for_each_concurrently(4, [&](int i) { sum += 1 << i; });
  CHECK(sum == 15);
  CHECK_THROWS_AS(for_each_concurrently(2, [](int i) {
                    if (i == 1) throw ConfigError("x");
                  }),
                  ConfigError);
}
