#include "bvam/errors.hpp"
#include "bvam/integrator.hpp"
#include "bvam/model.hpp"
#include "bvam/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bvam;

namespace {

ModelParameters full_params() {
  ModelParameters p;
  p.C = -1.1;
  p.d11 = 0.07;
  p.d22 = 0.05;
  p.d12 = 0.02;
  return p;
}

}  // namespace

TEST_CASE("reaction terms match the polynomial written out by hand") {
  const auto p = full_params();
  const double u = 0.7, v = -0.4;
  const auto r = reaction_terms(p, u, v);
  CHECK(r.r1 == doctest::Approx(u + p.a * v - p.C * u * v - u * v * v).epsilon(1e-15));
  CHECK(r.r2 == doctest::Approx(p.b * v + p.H * u + p.C * u * v + u * v * v).epsilon(1e-15));
}

TEST_CASE("zero state is a root of every reaction term") {
  for (auto label : {Regime::linear, Regime::self_u1, Regime::self_u2, Regime::cross}) {
    for (double C : {-0.5, -1.0, -1.5}) {
      const auto r = reaction_terms(make_regime(label, C).parameters, 0.0, 0.0);
      CHECK(r.r1 == 0.0);
      CHECK(r.r2 == 0.0);
    }
  }
}

TEST_CASE("analytic Jacobians agree with central differences") {
  const auto p = full_params();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const double u = d(rng), v = d(rng);
    const auto jr = reaction_jacobian(p, u, v);
    const auto jm = potential_jacobian(p, u, v);
    const auto ru = reaction_terms(p, u + h, v), rd = reaction_terms(p, u - h, v);
    const auto rv = reaction_terms(p, u, v + h), rw = reaction_terms(p, u, v - h);
    CHECK(jr(0, 0) == doctest::Approx((ru.r1 - rd.r1) / (2 * h)).epsilon(1e-7));
    CHECK(jr(1, 0) == doctest::Approx((ru.r2 - rd.r2) / (2 * h)).epsilon(1e-7));
    CHECK(jr(0, 1) == doctest::Approx((rv.r1 - rw.r1) / (2 * h)).epsilon(1e-7));
    CHECK(jr(1, 1) == doctest::Approx((rv.r2 - rw.r2) / (2 * h)).epsilon(1e-7));
    const auto mu = chemical_potentials(p, u + h, v), md = chemical_potentials(p, u - h, v);
    const auto mv = chemical_potentials(p, u, v + h), mw = chemical_potentials(p, u, v - h);
    CHECK(jm(0, 0) == doctest::Approx((mu.mu1 - md.mu1) / (2 * h)).epsilon(1e-7));
    CHECK(jm(1, 0) == doctest::Approx((mu.mu2 - md.mu2) / (2 * h)).epsilon(1e-7));
    CHECK(jm(0, 1) == doctest::Approx((mv.mu1 - mw.mu1) / (2 * h)).epsilon(1e-7));
    CHECK(jm(1, 1) == doctest::Approx((mv.mu2 - mw.mu2) / (2 * h)).epsilon(1e-7));
    CHECK(jm(0, 1) == doctest::Approx(jm(1, 0)).epsilon(1e-14));
  }
}

TEST_CASE("chemical potentials are the gradient of the energy density") {
  const auto p = full_params();
  const double h = 1e-6;
  for (double u : {-1.2, 0.3, 0.9}) {
    for (double v : {-0.8, 0.1, 1.4}) {
      const auto m = chemical_potentials(p, u, v);
      CHECK(m.mu1 == doctest::Approx((energy_density(p, u + h, v) - energy_density(p, u - h, v)) / (2 * h)).epsilon(1e-8));
      CHECK(m.mu2 == doctest::Approx((energy_density(p, u, v + h) - energy_density(p, u, v - h)) / (2 * h)).epsilon(1e-8));
    }
  }
}

TEST_CASE("regime presets carry exactly one nonlinear coefficient") {
  const auto lin = make_regime(Regime::linear).parameters;
  CHECK(lin.d11 == 0.0);
  CHECK(lin.d22 == 0.0);
  CHECK(lin.d12 == 0.0);
  CHECK(make_regime(Regime::self_u1).parameters.d11 == 0.07);
  CHECK(make_regime(Regime::self_u2).parameters.d22 == 0.05);
  const auto cross = make_regime(Regime::cross, -1.2).parameters;
  CHECK(cross.d12 == 0.02);
  CHECK(cross.d11 == 0.0);
  CHECK(cross.d22 == 0.0);
  CHECK(cross.C == -1.2);
  for (auto label : {Regime::linear, Regime::self_u1, Regime::self_u2, Regime::cross}) {
    const auto q = make_regime(label).parameters;
    CHECK(q.Lx == 5.0);
    CHECK(q.H == 3.0);
    CHECK(q.eta == 1.0);
    CHECK(q.a == -1.0);
    CHECK(q.b == -1.5);
    CHECK(q.d1 == 0.08);
    CHECK(q.d2 == 1.0);
    CHECK(parse_regime(to_string(label)) == label);
  }
  CHECK_THROWS_AS(parse_regime("quadratic"), ConfigError);
}

TEST_CASE("parameter validation") {
  ModelParameters p;
  CHECK_NOTHROW(p.validate());
  p.Lx = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ModelParameters{};
  p.d12 = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ModelParameters{};
  p.C = std::nan("");
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("energy of a constant state is the domain length times the density") {
  const auto p = full_params();
  SpectralGrid g(32, p.Lx);
  FieldPair s{Eigen::VectorXd::Constant(32, 0.3), Eigen::VectorXd::Constant(32, -0.6)};
  CHECK(energy(p, g, s) == doctest::Approx(2 * p.Lx * energy_density(p, 0.3, -0.6)).epsilon(1e-14));
  CHECK(energy(p, g, FieldPair::zeros(32)) == 0.0);
}

TEST_CASE("energy law equals the time derivative of the discrete energy") {
  for (auto label : {Regime::linear, Regime::self_u1, Regime::self_u2, Regime::cross}) {
    for (bool dealias : {false, true}) {
      const auto p = make_regime(label, -1.2).parameters;
      SpectralGrid g(32, p.Lx, dealias);
      FieldPair s = FieldPair::zeros(32);
      for (int j = 0; j < 32; ++j) {
        const double x = g.points()[j];
        s.u1[j] = 0.4 * std::cos(3 * M_PI * x / p.Lx) + 0.1 * std::sin(M_PI * x / p.Lx);
        s.u2[j] = -0.3 * std::cos(2 * M_PI * x / p.Lx) + 0.05;
      }
      // Central difference of E along the exact flow, using RK4 with a tiny step.
      const double h = 1e-4;
      const double ep = energy(p, g, flow_map(p, g, s, h, h / 4));
      // RK4 with a negative step runs the flow backwards.
      Rk4Stepper stepper(p, g);
      Eigen::VectorXd y = s.stacked();
      for (int i = 0; i < 4; ++i) stepper.step(y, -h / 4);
      const double em = energy(p, g, FieldPair::from_stacked(y));
      const double fd = (ep - em) / (2 * h);
      const double law = energy_dissipation_rhs(p, g, s);
      CHECK(law == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("field pair layout") {
  Eigen::VectorXd y(6);
  y << 1, 2, 3, 4, 5, 6;
  const auto s = FieldPair::from_stacked(y);
  CHECK(s.u1[2] == 3);
  CHECK(s.u2[0] == 4);
  CHECK(s.stacked() == y);
  CHECK_THROWS_AS(FieldPair::from_stacked(Eigen::VectorXd(5)), DimensionError);
  CHECK_THROWS_AS(s.check(4), DimensionError);
}
