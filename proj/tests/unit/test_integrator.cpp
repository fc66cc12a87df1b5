#include "bvam/errors.hpp"
#include "bvam/integrator.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace bvam;

namespace {

FieldPair smooth_state(const SpectralGrid& g, double amp) {
  FieldPair s = FieldPair::zeros(g.size());
  const double L = g.half_length();
  for (int j = 0; j < g.size(); ++j) {
    const double x = g.points()[j];
    s.u1[j] = amp * (std::cos(3 * M_PI * x / L) + 0.3 * std::sin(M_PI * x / L));
    s.u2[j] = amp * (0.5 * std::cos(2 * M_PI * x / L) - 0.2);
  }
  return s;
}

// Stability polynomial of classical RK4.
Eigen::Matrix2d rk4_polynomial(const Eigen::Matrix2d& z) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d z2 = z * z;
  return I + z + z2 / 2 + z2 * z / 6 + z2 * z2 / 24;
}

}  // namespace

TEST_CASE("one step on a tiny single-mode state is the RK4 polynomial of the mode matrix") {
  auto p = make_regime(Regime::linear, 0.0).parameters;
  SpectralGrid g(16, p.Lx);
  const int m = 2;
  const double k = M_PI * m / p.Lx;
  const double amp = 1e-7;
  FieldPair s = FieldPair::zeros(16);
  for (int j = 0; j < 16; ++j) {
    s.u1[j] = amp * std::cos(k * g.points()[j]);
    s.u2[j] = -0.5 * amp * std::cos(k * g.points()[j]);
  }
  Eigen::Matrix2d a;
  a << p.eta * 1.0 - k * k * p.d1, p.eta * p.a, p.eta * p.H, p.eta * p.b - k * k * p.d2;
  const double dt = 0.01;
  const Eigen::Vector2d expect = rk4_polynomial(dt * a) * Eigen::Vector2d(1.0, -0.5);
  const auto next = rk4_step(p, g, s, dt);
  for (int j = 0; j < 16; ++j) {
    const double c = amp * std::cos(k * g.points()[j]);
    CHECK(next.u1[j] == doctest::Approx(expect[0] * c).epsilon(1e-13).scale(amp));
    CHECK(next.u2[j] == doctest::Approx(expect[1] * c).epsilon(1e-13).scale(amp));
  }
}

TEST_CASE("global error falls as dt^4") {
  auto p = make_regime(Regime::self_u1, -1.2).parameters;
  SpectralGrid g(16, p.Lx);
  const auto s = smooth_state(g, 0.5);
  const double T = 0.5;
  const auto ref = flow_map(p, g, s, T, 1e-4);
  auto err = [&](double dt) { return (flow_map(p, g, s, T, dt).stacked() - ref.stacked()).norm(); };
  const double e1 = err(4e-3), e2 = err(2e-3);
  CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("flow map is a semigroup when the step divides both times") {
  auto p = make_regime(Regime::cross, -1.0).parameters;
  SpectralGrid g(16, p.Lx);
  const auto s = smooth_state(g, 0.3);
  const double dt = 1.0 / 512;
  const auto whole = flow_map(p, g, s, 0.75, dt);
  const auto split = flow_map(p, g, flow_map(p, g, s, 0.5, dt), 0.25, dt);
  CHECK(whole.stacked() == split.stacked());
}

TEST_CASE("step count policy lands exactly on T") {
  CHECK(steps_for(1.0, 0.1) == 10);
  CHECK(steps_for(1.05, 0.1) == 11);
  CHECK(steps_for(1e-6, 0.1) == 1);
  CHECK(steps_for(3.0, 1e-3) == 3000);
}

TEST_CASE("integrate records t = 0, the stride and the exact final time") {
  auto p = make_regime(Regime::linear, -0.8).parameters;
  SpectralGrid g(16, p.Lx);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.record_every = 10;
  const auto traj = integrate(p, g, smooth_state(g, 0.2), 1.05, cfg);
  REQUIRE(traj.size() == 12);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times[1] == doctest::Approx(0.1));
  CHECK(traj.times.back() == 1.05);
  CHECK(traj.energies.size() == traj.size());
  CHECK(traj.energies[0] == doctest::Approx(energy(p, g, smooth_state(g, 0.2))));
}

TEST_CASE("integration is bitwise reproducible") {
  auto p = make_regime(Regime::self_u2, -1.3).parameters;
  SpectralGrid g(32, p.Lx);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.record_every = 50;
  const auto a = integrate(p, g, smooth_state(g, 0.4), 2.0, cfg);
  const auto b = integrate(p, g, smooth_state(g, 0.4), 2.0, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.states[i].stacked() == b.states[i].stacked());
}

TEST_CASE("blow-up raises DivergenceError carrying the time") {
  auto p = make_regime(Regime::linear, -1.0).parameters;
  SpectralGrid g(16, p.Lx);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.divergence_threshold = 1e3;
  // u1 u2^2 drives large states to finite-time blow-up.
  FieldPair s{Eigen::VectorXd::Constant(16, 20.0), Eigen::VectorXd::Constant(16, 20.0)};
  try {
    integrate(p, g, s, 10.0, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 10.0);
  }
}

TEST_CASE("integrator settings are validated") {
  IntegratorConfig cfg;
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = IntegratorConfig{};
  cfg.record_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("zero state stays exactly zero") {
  auto p = make_regime(Regime::cross, -1.5).parameters;
  SpectralGrid g(16, p.Lx);
  const auto out = flow_map(p, g, FieldPair::zeros(16), 1.0, 0.01);
  CHECK(out.stacked().cwiseAbs().maxCoeff() == 0.0);
}
