#pragma once

#include "bvam/krylov.hpp"
#include "bvam/model.hpp"
#include "bvam/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string_view>
#include <vector>

namespace bvam {

enum class OrbitStatus { converged, not_converged, collapsed_to_equilibrium };

std::string_view to_string(OrbitStatus status);

struct PeriodicOrbit {
  FieldPair anchor;
  double period = 3.0;
  double residual_norm = 0.0;
  bool converged = false;
  OrbitStatus status = OrbitStatus::not_converged;
  int iterations = 0;
};

/// Scalar row closing the shooting system.
enum class PhaseCondition {
  /// (X - X_ref) . F(X_ref) / |F(X_ref)|: Poincare section through the reference point.
  reference_offset,
  /// (phi^T(X) - X) . F(X_ref) / |F(X_ref)|: the periodicity defect projected on the reference flow.
  periodicity_defect,
};

struct OrbitSettings {
  double dt = 5e-4;
  double tol = 5e-4;
  int max_iterations = 20;
  PhaseCondition phase = PhaseCondition::reference_offset;
  /// ||F(anchor)|| below this marks a collapse onto a steady state.
  double collapse_threshold = 1e-8;
  double divergence_threshold = 1e3;
  NewtonKrylovOptions newton{5e-4, 20, 60, 1e-4, 120, 8};
};

/// [phi^T(X) - X; phase row], length 2N + 1. `steps` = 0 uses ceil(T / dt).
Eigen::VectorXd shooting_residual(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& candidate,
                                  const FieldPair& reference, double dt,
                                  PhaseCondition phase = PhaseCondition::reference_offset, long steps = 0);

/// Joint Newton-Krylov on (anchor, T). Non-convergence and collapse onto an
/// equilibrium are reported through `status`; only invalid input throws.
PeriodicOrbit solve_orbit(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& guess,
                          const FieldPair& reference, const OrbitSettings& settings);

struct MonodromyResult {
  Eigen::MatrixXd matrix;
  /// Sorted by descending modulus.
  std::vector<std::complex<double>> multipliers;
  /// Eigenvectors of the first few multipliers, in the same order (stacked layout).
  Eigen::MatrixXcd leading_vectors;
  /// Multiplier of the flow direction F(anchor).
  int trivial_index = 0;
  /// Multiplier of the spatial translation direction d/dx anchor, or -1. On a
  /// periodic domain every non-homogeneous orbit carries this second neutral mode.
  int symmetry_index = -1;
};

/// Sorts multipliers and keeps `keep_vectors` leading eigenvectors. Without
/// neutral directions the trivial multiplier is the one closest to 1.
MonodromyResult analyze_monodromy(Eigen::MatrixXd matrix, int keep_vectors = 4);

/// Same, identifying the trivial and translation multipliers as those (within
/// `window` of 1) whose eigenvectors best align with `flow_direction` and
/// `translation_direction` respectively.
MonodromyResult analyze_monodromy(Eigen::MatrixXd matrix, const Eigen::VectorXd& flow_direction,
                                  const Eigen::VectorXd& translation_direction, int keep_vectors = 4,
                                  double window = 0.1);

/// d/dx of both species of a state, stacked.
Eigen::VectorXd translation_direction(const SpectralGrid& grid, const FieldPair& state);

/// Column i = (phi^T(X + h e_i) - phi^T(X)) / h, columns evaluated in parallel and
/// stored in column order, so the result does not depend on thread scheduling.
MonodromyResult monodromy_matrix(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& orbit,
                                 double dt, double h = 1e-3);
/// Single-threaded reference; bitwise identical to monodromy_matrix.
MonodromyResult monodromy_matrix_serial(const ModelParameters& p, const SpectralGrid& grid,
                                        const PeriodicOrbit& orbit, double dt, double h = 1e-3);

enum class OrbitBifurcationKind { none, fold, period_doubling, neimark_sacker };

std::string_view to_string(OrbitBifurcationKind kind);

struct OrbitBifurcation {
  OrbitBifurcationKind kind = OrbitBifurcationKind::none;
  /// Largest non-trivial multiplier (by modulus), reported even when kind is none.
  std::complex<double> critical_multiplier{0.0, 0.0};
};

/// Classifies the largest multiplier not listed in `neutral`. A multiplier with
/// |imag| <= tol_angle counts as real.
OrbitBifurcation classify_orbit_bifurcation(const std::vector<std::complex<double>>& multipliers,
                                            const std::vector<int>& neutral, double tol_angle = 1e-3);
OrbitBifurcation classify_orbit_bifurcation(const MonodromyResult& result, double tol_angle = 1e-3);

}  // namespace bvam
