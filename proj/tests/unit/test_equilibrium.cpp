#include "bvam/equilibrium.hpp"
#include "bvam/errors.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

using namespace bvam;
using cd = std::complex<double>;

namespace {

// Per-mode 2x2 linearization at the zero state.
std::vector<cd> dispersion_union(const ModelParameters& p, int n) {
  std::vector<cd> out;
  for (int m = -n / 2 + 1; m <= n / 2; ++m) {
    const double k2 = std::pow(M_PI * m / p.Lx, 2);
    Eigen::Matrix2d a;
    a << p.eta - k2 * p.d1, p.eta * p.a, p.eta * p.H, p.eta * p.b - k2 * p.d2;
    Eigen::EigenSolver<Eigen::Matrix2d> es(a);
    out.push_back(es.eigenvalues()[0]);
    out.push_back(es.eigenvalues()[1]);
  }
  return out;
}

double matching_distance(std::vector<cd> a, std::vector<cd> b) {
  // Greedy nearest matching; fine for well-separated test spectra.
  double worst = 0.0;
  for (const auto& x : a) {
    auto it = std::min_element(b.begin(), b.end(), [&](cd u, cd v) { return std::abs(u - x) < std::abs(v - x); });
    worst = std::max(worst, std::abs(*it - x) / std::max(1.0, std::abs(x)));
    b.erase(it);
  }
  return worst;
}

}  // namespace

TEST_CASE("zero state has an exactly vanishing residual") {
  for (auto label : {Regime::linear, Regime::self_u1, Regime::self_u2, Regime::cross}) {
    SpectralGrid g(32, 5.0);
    CHECK(residual(make_regime(label, -1.0).parameters, g, FieldPair::zeros(32)).norm() == 0.0);
  }
}

TEST_CASE("residual is the inverse-transformed Fourier right-hand side") {
  auto p = make_regime(Regime::self_u2, -1.2).parameters;
  SpectralGrid g(32, p.Lx);
  std::mt19937 rng(3);
  std::normal_distribution<double> d(0.0, 0.5);
  FieldPair s = FieldPair::zeros(32);
  for (int j = 0; j < 32; ++j) {
    s.u1[j] = d(rng);
    s.u2[j] = d(rng);
  }
  const auto r = residual(p, g, s);
  const auto f = rhs_fourier(p, g, s);
  CHECK((r.head(32) - inverse_transform(g, f.species1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.tail(32) - inverse_transform(g, f.species2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linearization at zero matches the per-mode dispersion relation") {
  for (auto label : {Regime::linear, Regime::cross}) {
    auto p = make_regime(label, -0.9).parameters;
    SpectralGrid g(24, p.Lx);
    const auto rep = stability_spectrum(p, g, FieldPair::zeros(24));
    CHECK(rep.eigenvalues.size() == 48);
    CHECK(matching_distance(rep.eigenvalues, dispersion_union(p, 24)) < 1e-8);
  }
}

TEST_CASE("dense Laplacian: serial and OpenMP builds agree bitwise and differentiate cosines") {
  SpectralGrid g(32, 5.0);
  const auto a = laplacian_matrix(g);
  const auto b = laplacian_matrix_serial(g);
  CHECK(a == b);
  const double k = 2 * M_PI / 5.0;
  Eigen::VectorXd u = (k * g.points().array()).cos();
  CHECK((a * u + k * k * u).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembled linearization equals a finite-difference Jacobian of the residual") {
  auto p = make_regime(Regime::cross, -1.1).parameters;
  p.d11 = 0.07;
  p.d22 = 0.05;
  SpectralGrid g(16, p.Lx);
  FieldPair s = cosine_guess(g, 0.6, -0.4, 2, 1);
  s.u2.array() += 0.1;
  const auto j = assemble_linearization(p, g, s);
  CHECK(j == assemble_linearization_serial(p, g, s));
  const double h = 1e-6;
  const Eigen::VectorXd x = s.stacked();
  for (int c = 0; c < 32; ++c) {
    Eigen::VectorXd xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const Eigen::VectorXd col =
        (residual(p, g, FieldPair::from_stacked(xp)) - residual(p, g, FieldPair::from_stacked(xm))) / (2 * h);
    CHECK((j.col(c) - col).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, col.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("cosine guess") {
  SpectralGrid g(16, 5.0);
  const auto s = cosine_guess(g, 0.5, 0.25, 3, 1);
  CHECK(s.u1[g.center_index()] == doctest::Approx(0.5));
  CHECK(s.u2[0] == doctest::Approx(-0.25));
  CHECK(s.u1[0] == doctest::Approx(-0.5));
}

TEST_CASE("Newton-Krylov reaches a Turing state and warm starts cheaply") {
  auto p = make_regime(Regime::linear, -0.5).parameters;
  SpectralGrid g(64, p.Lx);
  const auto r = newton_krylov_solve(p, g, cosine_guess(g, 0.5, 0.5, 3, 3), 1e-10, 50);
  REQUIRE(r.converged);
  CHECK(r.residual_norm <= 1e-10);
  CHECK(residual(p, g, r.state).norm() <= 1e-10);
  CHECK(r.state.u1.cwiseAbs().maxCoeff() > 0.1);

  auto q = p;
  q.C = -0.51;
  const auto w = newton_krylov_solve(q, g, r.state, 1e-10, 50);
  CHECK(w.converged);
  CHECK(w.iterations <= 5);

  // Already a root: no iteration needed.
  const auto again = newton_krylov_solve(p, g, r.state, 1e-10, 50);
  CHECK(again.iterations <= 1);
}

TEST_CASE("Newton-Krylov input checks") {
  SpectralGrid g(16, 5.0);
  CHECK_THROWS_AS(newton_krylov_solve(ModelParameters{}, g, FieldPair::zeros(8), 1e-10, 10), DimensionError);
  CHECK_THROWS_AS(newton_krylov_solve(ModelParameters{}, g, FieldPair::zeros(16), -1.0, 10), ConfigError);
  CHECK_THROWS_AS(laplacian_matrix(SpectralGrid(2 * kDenseGridLimit + 2, 5.0)), DimensionError);
}

TEST_CASE("spectrum classification") {
  SUBCASE("stable below the threshold") {
    const auto r = classify_spectrum({cd(-0.1, 0), cd(5e-4, 0), cd(-2, 1)});
    CHECK(r.stable);
    CHECK(r.max_real_part == doctest::Approx(5e-4));
    CHECK(r.eigenvalues.front() == cd(5e-4, 0));
  }
  SUBCASE("complex pair crossing flags a Hopf candidate") {
    const auto r = classify_spectrum({cd(-1, 0), cd(0.02, 2.1), cd(0.02, -2.1)});
    CHECK_FALSE(r.stable);
    CHECK(r.hopf_candidate);
  }
  SUBCASE("real crossing is not a Hopf candidate") {
    const auto r = classify_spectrum({cd(0.3, 0), cd(0.02, 2.1), cd(0.02, -2.1)});
    CHECK_FALSE(r.stable);
    CHECK_FALSE(r.hopf_candidate);
  }
}

TEST_CASE("the linear regime loses stability through a complex pair") {
  auto p = make_regime(Regime::linear, -0.6).parameters;
  SpectralGrid g(48, p.Lx);
  const auto before = newton_krylov_solve(p, g, cosine_guess(g, 0.5, 0.5, 3, 3), 1e-10, 50);
  REQUIRE(before.converged);
  CHECK(stability_spectrum(p, g, before.state).stable);
  p.C = -1.2;
  FieldPair s = before.state;
  for (double C = -0.7; C >= -1.2 - 1e-9; C -= 0.1) {
    auto q = p;
    q.C = C;
    s = newton_krylov_solve(q, g, s, 1e-10, 50).state;
  }
  const auto after = stability_spectrum(p, g, s);
  CHECK_FALSE(after.stable);
  CHECK(after.hopf_candidate);
  // Eigenvalues of a real matrix close under conjugation.
  for (const auto& z : after.eigenvalues) {
    const bool has_conjugate = std::any_of(after.eigenvalues.begin(), after.eigenvalues.end(),
                                           [&](cd w) { return std::abs(w - std::conj(z)) < 1e-8; });
    CHECK(has_conjugate);
  }
}
