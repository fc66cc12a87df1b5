#pragma once

#include "bvam/equilibrium.hpp"
#include "bvam/model.hpp"
#include "bvam/orbit.hpp"
#include "bvam/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bvam {

enum class BranchKind { equilibrium, orbit };
enum class BranchEvent { none, hopf, fold, period_doubling, neimark_sacker };

std::string_view to_string(BranchKind kind);
std::string_view to_string(BranchEvent event);
BranchEvent event_from(OrbitBifurcationKind kind);

struct ContinuationSettings {
  double C_start = -0.5;
  double C_end = -1.5;
  int steps = 100;
  EquilibriumSettings solver{};
  double stability_threshold = 1e-3;
  double imag_tol = 1e-3;
  /// Sub-step halvings tried when a warm-started solve fails.
  int max_halvings = 4;
};

struct EquilibriumPoint {
  double C = 0.0;
  FieldPair state;
  double energy = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  StabilityReport stability;
  BranchEvent event = BranchEvent::none;
};

struct EquilibriumBranch {
  DiffusionRegime regime;
  std::vector<EquilibriumPoint> points;
  /// First stable -> unstable point whose leading pair is complex, or -1.
  int hopf_index = -1;
  /// Number of stable/unstable flips between consecutive points.
  int stability_changes = 0;
  bool truncated = false;
  std::string diagnostic;
};

/// Natural-parameter sweep C_k = C_start + k (C_end - C_start) / steps, k = 0..steps,
/// each solve warm-started from the previous point. A failed point is retried
/// through up to `max_halvings` levels of intermediate sub-steps; after that the
/// branch is truncated and the points found so far are kept.
EquilibriumBranch continue_equilibria(const DiffusionRegime& regime, const SpectralGrid& grid,
                                      const FieldPair& initial_guess, const ContinuationSettings& settings);

struct OrbitContinuationSettings {
  double delta_C = -0.01;
  int max_steps = 200;
  /// Sweep stops once C passes this value.
  double C_limit = -3.0;
  OrbitSettings orbit{};
  double monodromy_h = 1e-3;
  double tol_angle = 1e-3;
  int max_halvings = 4;
  bool stop_at_instability = true;
  /// Dense monodromy every `monodromy_stride` steps. When an instability shows up,
  /// the skipped points are bisected, so the flagged point is the same as with a
  /// stride of 1 as long as the multipliers cross the unit circle only once in between.
  int monodromy_stride = 1;
};

struct OrbitPoint {
  double C = 0.0;
  PeriodicOrbit orbit;
  /// Energy of the anchor state.
  double energy = 0.0;
  bool has_monodromy = false;
  std::vector<std::complex<double>> multipliers;
  int trivial_index = -1;
  int symmetry_index = -1;
  OrbitBifurcation bifurcation;
  /// Eigenvector of the critical multiplier (stacked layout).
  Eigen::VectorXcd critical_vector;
  /// All kept eigenvectors sharing the critical multiplier. Spatial symmetries of
  /// the pattern make the flip multiplier degenerate, with one column per copy.
  Eigen::MatrixXcd critical_space;
  BranchEvent event = BranchEvent::none;
};

struct OrbitBranch {
  DiffusionRegime regime;
  std::vector<OrbitPoint> points;
  int event_index = -1;
  BranchEvent event = BranchEvent::none;
  bool truncated = false;
  std::string diagnostic;
};

/// Steps C by delta_C from a converged orbit, warm-starting each shooting solve
/// from the previous orbit (which also serves as the phase reference).
OrbitBranch continue_orbits(const DiffusionRegime& regime, const SpectralGrid& grid, const PeriodicOrbit& start,
                            const OrbitContinuationSettings& settings);

/// Floquet data of one orbit, filled into `point`.
void attach_monodromy(const ModelParameters& p, const SpectralGrid& grid, OrbitPoint& point, double dt, double h,
                      double tol_angle);

struct SeedSettings {
  double perturbation = 1e-3;
  double min_transient = 50.0;
  double max_transient = 3000.0;
  /// Time between energy samples used for peak detection.
  double sample_interval = 0.005;
  /// Relative change of the energy swing between consecutive windows accepted as saturated.
  double saturation_tol = 1e-3;
  double period_guess = 3.0;
  OrbitSettings orbit{};
  /// Floquet step used when period_doubled_seed compares candidate cycles.
  double monodromy_h = 1e-3;
};

struct SaturatedTransient {
  FieldPair state;
  double time = 0.0;
  /// Mean spacing of the last energy peaks.
  double peak_spacing = 0.0;
  double swing = 0.0;
};

/// Integrates until the energy oscillation saturates. Throws ConvergenceError
/// ("no periodicity") when the swing decays below roundoff or never settles.
SaturatedTransient saturate(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& start,
                            const SeedSettings& settings);

/// Leaves an unstable equilibrium along its leading eigenvector, waits for the
/// oscillation to saturate and refines it with solve_orbit.
PeriodicOrbit hopf_seed_orbit(const DiffusionRegime& regime, const SpectralGrid& grid,
                              const EquilibriumPoint& hopf_point, const SeedSettings& settings);

/// Same construction past a period doubling: perturbs the orbit along the critical
/// Floquet space and solves with twice the base period. With a degenerate flip
/// multiplier several doubled cycles bifurcate; every basis direction and the
/// pairwise sums and differences are tried, and the first cycle without an
/// unstable multiplier wins (otherwise the least unstable one). Throws
/// ConvergenceError when every attempt fails or returns the base cycle traversed twice.
PeriodicOrbit period_doubled_seed(const DiffusionRegime& regime, const SpectralGrid& grid,
                                  const OrbitPoint& flagged_point, const SeedSettings& settings);

/// Runs `work(i)` for i in [0, count) concurrently (one task per regime).
void for_each_concurrently(int count, const std::function<void(int)>& work);

}  // namespace bvam
