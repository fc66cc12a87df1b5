#include "bvam/model.hpp"

#include "bvam/errors.hpp"
#include "bvam/spectral.hpp"

#include <cmath>
#include <string>

namespace bvam {

void ModelParameters::validate() const {
  const double all[] = {eta, a, b, C, H, d1, d2, d11, d22, d12, Lx};
  for (double v : all) {
    if (!std::isfinite(v)) throw ConfigError("model parameters must be finite");
  }
  if (Lx <= 0.0) throw ConfigError("Lx must be positive");
  if (d1 < 0.0 || d2 < 0.0 || d11 < 0.0 || d22 < 0.0 || d12 < 0.0) {
    throw ConfigError("diffusion coefficients must be non-negative");
  }
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::linear: return "linear";
    case Regime::self_u1: return "self_u1";
    case Regime::self_u2: return "self_u2";
    case Regime::cross: return "cross";
  }
  return "linear";
}

Regime parse_regime(std::string_view text) {
  if (text == "linear") return Regime::linear;
  if (text == "self_u1") return Regime::self_u1;
  if (text == "self_u2") return Regime::self_u2;
  if (text == "cross") return Regime::cross;
  throw ConfigError("unknown regime '" + std::string(text) + "' (expected linear, self_u1, self_u2 or cross)");
}

DiffusionRegime make_regime(Regime label, double C) {
  DiffusionRegime r;
  r.label = label;
  r.parameters.C = C;
  switch (label) {
    case Regime::linear: break;
    case Regime::self_u1: r.parameters.d11 = 0.07; break;
    case Regime::self_u2: r.parameters.d22 = 0.05; break;
    case Regime::cross: r.parameters.d12 = 0.02; break;
  }
  return r;
}

FieldPair FieldPair::zeros(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

FieldPair FieldPair::from_stacked(const Eigen::VectorXd& y) {
  if (y.size() % 2 != 0) throw DimensionError("stacked state must have even length");
  const Eigen::Index n = y.size() / 2;
  return {y.head(n), y.tail(n)};
}

Eigen::VectorXd FieldPair::stacked() const {
  Eigen::VectorXd y(u1.size() + u2.size());
  y << u1, u2;
  return y;
}

void FieldPair::check(Eigen::Index n) const {
  if (u1.size() != u2.size()) throw DimensionError("species lengths differ");
  if (u1.size() != n) {
    throw DimensionError("state has " + std::to_string(u1.size()) + " points, grid has " + std::to_string(n));
  }
}

Eigen::Matrix2d reaction_jacobian(const ModelParameters& p, double u1, double u2) {
  Eigen::Matrix2d j;
  j << p.eta * (1.0 - p.C * u2 - u2 * u2), p.eta * (p.a - p.C * u1 - 2.0 * u1 * u2),
       p.eta * (p.H + p.C * u2 + u2 * u2), p.eta * (p.b + p.C * u1 + 2.0 * u1 * u2);
  return j;
}

Eigen::Matrix2d potential_jacobian(const ModelParameters& p, double u1, double u2) {
  const double off = 2.0 * p.d12 * u1 * u2;
  Eigen::Matrix2d j;
  j << p.d1 + 3.0 * p.d11 * u1 * u1 + p.d12 * u2 * u2, off,
       off, p.d2 + 3.0 * p.d22 * u2 * u2 + p.d12 * u1 * u1;
  return j;
}

double energy(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state) {
  state.check(grid.size());
  double sum = 0.0;
  for (Eigen::Index j = 0; j < state.size(); ++j) sum += energy_density(p, state.u1[j], state.u2[j]);
  return sum * grid.spacing();
}

double energy_dissipation_rhs(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state) {
  state.check(grid.size());
  const int n = grid.size();
  const int nh = grid.half_size();
  Eigen::VectorXd mu[2] = {Eigen::VectorXd(n), Eigen::VectorXd(n)};
  Eigen::VectorXd react[2] = {Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int j = 0; j < n; ++j) {
    const auto m = chemical_potentials(p, state.u1[j], state.u2[j]);
    const auto r = reaction_terms(p, state.u1[j], state.u2[j]);
    mu[0][j] = m.mu1;
    mu[1][j] = m.mu2;
    react[0][j] = r.r1;
    react[1][j] = r.r2;
  }

  std::vector<Complex> spec(nh), scratch(nh);
  const auto& k2 = grid.half_k2();
  const auto& mask = grid.half_mask();
  const double inv_n = 1.0 / n;
  double gradient = 0.0;
  double exchange = 0.0;
  for (int s = 0; s < 2; ++s) {
    grid.raw_forward(mu[s].data(), spec.data());
    for (int m = 0; m < nh; ++m) {
      const double weight = (m == 0 || 2 * m == n) ? 1.0 : 2.0;
      gradient += weight * mask[m] * k2[m] * std::norm(spec[m] * inv_n);
    }
    if (grid.dealiased()) {
      grid.raw_forward(react[s].data(), spec.data());
      for (int m = 0; m < nh; ++m) spec[m] *= mask[m] * inv_n;
      grid.raw_inverse(spec.data(), react[s].data(), scratch.data());
    }
    exchange += react[s].dot(mu[s]);
  }
  return -2.0 * grid.half_length() * gradient + grid.spacing() * exchange;
}

}  // namespace bvam
