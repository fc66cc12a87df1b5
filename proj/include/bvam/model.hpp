#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace bvam {

class SpectralGrid;

/// Reaction and diffusion coefficients of the augmented BVAM system on [-Lx, Lx].
///
/// Defaults are the shared reaction values with linear diffusion; `C` is the
/// bifurcation parameter swept by the continuation drivers.
struct ModelParameters {
  double eta = 1.0;
  double a = -1.0;
  double b = -1.5;
  double C = -0.5;
  double H = 3.0;
  double d1 = 0.08;
  double d2 = 1.0;
  double d11 = 0.0;
  double d22 = 0.0;
  double d12 = 0.0;
  double Lx = 5.0;

  /// Throws ConfigError when Lx <= 0, a diffusion coefficient is negative, or a value is not finite.
  void validate() const;
};

enum class Regime { linear, self_u1, self_u2, cross };

std::string_view to_string(Regime regime);
/// Accepts "linear", "self_u1", "self_u2", "cross"; throws ConfigError otherwise.
Regime parse_regime(std::string_view text);

struct DiffusionRegime {
  Regime label = Regime::linear;
  ModelParameters parameters;
};

/// Preset for one of the four published diffusion regimes, with the given C.
DiffusionRegime make_regime(Regime label, double C = -0.5);

/// Species densities on the collocation grid.
struct FieldPair {
  Eigen::VectorXd u1;
  Eigen::VectorXd u2;

  static FieldPair zeros(Eigen::Index n);
  /// Inverse of stacked(); throws DimensionError on odd length.
  static FieldPair from_stacked(const Eigen::VectorXd& y);

  Eigen::Index size() const { return u1.size(); }
  /// [u1; u2], the layout every solver works in.
  Eigen::VectorXd stacked() const;
  /// Throws DimensionError when the species lengths differ or n is odd.
  void check(Eigen::Index n) const;
};

struct ReactionValues {
  double r1;
  double r2;
};

struct ChemicalPotentials {
  double mu1;
  double mu2;
};

inline ReactionValues reaction_terms(const ModelParameters& p, double u1, double u2) {
  const double uv = u1 * u2;
  const double uvv = uv * u2;
  return {p.eta * (u1 + p.a * u2 - p.C * uv - uvv), p.eta * (p.b * u2 + p.H * u1 + p.C * uv + uvv)};
}

inline ChemicalPotentials chemical_potentials(const ModelParameters& p, double u1, double u2) {
  return {p.d1 * u1 + p.d11 * u1 * u1 * u1 + p.d12 * u2 * u2 * u1,
          p.d2 * u2 + p.d22 * u2 * u2 * u2 + p.d12 * u1 * u1 * u2};
}

/// d(R1, R2)/d(u1, u2), rows indexed by species.
Eigen::Matrix2d reaction_jacobian(const ModelParameters& p, double u1, double u2);

/// d(mu1, mu2)/d(u1, u2); symmetric because mu is the gradient of the energy density.
Eigen::Matrix2d potential_jacobian(const ModelParameters& p, double u1, double u2);

/// Energy density whose partial derivatives are the chemical potentials.
inline double energy_density(const ModelParameters& p, double u1, double u2) {
  const double s1 = u1 * u1;
  const double s2 = u2 * u2;
  return 0.5 * p.d1 * s1 + 0.5 * p.d2 * s2 + 0.25 * p.d11 * s1 * s1 + 0.25 * p.d22 * s2 * s2 +
         0.5 * p.d12 * s1 * s2;
}

/// Rectangle-rule quadrature of the energy density over the periodic domain.
double energy(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state);

/// Right-hand side of the energy law: -sum ||grad mu_i||^2 + sum (R_i, mu_i).
///
/// The gradient term is evaluated in Fourier space with the same symbol as the
/// Laplacian used by the time integrator (Nyquist mode included, dealiasing mask
/// honoured), so it equals the exact time derivative of the discrete energy along
/// the semi-discrete flow.
double energy_dissipation_rhs(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state);

}  // namespace bvam
