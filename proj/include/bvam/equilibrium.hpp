#pragma once

#include "bvam/krylov.hpp"
#include "bvam/model.hpp"
#include "bvam/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace bvam {

struct EquilibriumResult {
  FieldPair state;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  NewtonStatus status = NewtonStatus::max_iterations;
};

struct StabilityReport {
  /// Sorted by descending real part.
  std::vector<std::complex<double>> eigenvalues;
  /// Eigenvector of eigenvalues[0] (stacked layout).
  Eigen::VectorXcd leading_eigenvector;
  double max_real_part = 0.0;
  double threshold = 1e-3;
  bool stable = true;
  bool hopf_candidate = false;
};

/// Largest N for which dense operators are assembled.
inline constexpr int kDenseGridLimit = 2048;

/// Stationary residual [F1; F2] in real space (length 2N).
Eigen::VectorXd residual(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state);

/// u_i = A_i cos(pi m_i x / Lx).
FieldPair cosine_guess(const SpectralGrid& grid, double amplitude1, double amplitude2, int mode1, int mode2);

struct EquilibriumSettings {
  double tol = 1e-10;
  int max_iterations = 50;
  NewtonKrylovOptions newton{};
};

/// Right preconditioner -(shift + k^2 D)^-1 per species, D being the mean diagonal
/// mobility d mu_i / d u_i over `state`. Keeps GMRES iteration counts flat in N.
LinearOperator diffusion_preconditioner(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state,
                                        double shift = 1.0);

/// Falls back to diffusion_preconditioner(guess) unless settings.newton carries one.
EquilibriumResult newton_krylov_solve(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& guess,
                                      double tol = 1e-10, int max_iterations = 50);
EquilibriumResult newton_krylov_solve(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& guess,
                                      const EquilibriumSettings& settings);

/// Dense spectral Laplacian Delta_N = F^-1 diag(-k^2) F, assembled column by column (OpenMP).
Eigen::MatrixXd laplacian_matrix(const SpectralGrid& grid);
/// Single-threaded reference for laplacian_matrix.
Eigen::MatrixXd laplacian_matrix_serial(const SpectralGrid& grid);

/// Dense 2N x 2N linearization: block (i, j) = diag(dR_i/du_j) + Delta_N diag(dmu_i/du_j).
Eigen::MatrixXd assemble_linearization(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state);
Eigen::MatrixXd assemble_linearization_serial(const ModelParameters& p, const SpectralGrid& grid,
                                              const FieldPair& state);

/// Eigenvalues of the linearization with stability and Hopf flags. The Hopf flag is
/// raised when the leading eigenvalue has |imag| > imag_tol.
StabilityReport stability_spectrum(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state,
                                   double threshold = 1e-3, double imag_tol = 1e-3);

/// Classifies a sorted eigenvalue list (used by stability_spectrum, exposed for tests).
StabilityReport classify_spectrum(std::vector<std::complex<double>> eigenvalues, double threshold = 1e-3,
                                  double imag_tol = 1e-3);

}  // namespace bvam
