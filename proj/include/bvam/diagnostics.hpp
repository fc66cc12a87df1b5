#pragma once

#include "bvam/integrator.hpp"
#include "bvam/model.hpp"
#include "bvam/spectral.hpp"

#include <span>
#include <vector>

namespace bvam {

struct AttractorSample {
  double t = 0.0;
  double u1_center = 0.0;
  double u2_center = 0.0;
  double E = 0.0;
  /// NaN for the local attractor, which does not evaluate the energy law.
  double dEdt = 0.0;
  /// (t - tau) / (t_end - tau).
  double t_norm = 0.0;
};

/// (u1, u2) at x = 0 for every recorded time t >= tau. Throws ConfigError when
/// tau is not before the final time.
std::vector<AttractorSample> local_attractor(const Trajectory& traj, const SpectralGrid& grid, double tau);

/// (E, dE/dt) with dE/dt from the energy law, plus the x = 0 values.
std::vector<AttractorSample> energy_attractor(const ModelParameters& p, const SpectralGrid& grid,
                                              const Trajectory& traj, double tau);

struct ChaosReport {
  bool broadband = false;
  double dominant_power_fraction = 1.0;
  bool bounded = true;
  double max_abs = 0.0;
};

inline constexpr std::size_t kMinChaosSamples = 1024;

/// Largest single-bin power of the mean-removed amplitude spectrum over the total.
/// Throws ConfigError on fewer than kMinChaosSamples samples.
ChaosReport chaos_indicator(std::span<const double> signal, double sample_dt, double broadband_threshold = 0.5,
                            double bound = 10.0);

/// Largest distance from a sample of the last quarter of the (u1, u2) curve to the
/// polyline through the first quarter. Near zero for a curve retracing itself.
double closure_gap(const std::vector<AttractorSample>& samples);

/// Finite-difference dE/dt from consecutive energies (central inside, one-sided at the ends).
std::vector<double> energy_rate_fd(const Trajectory& traj);

}  // namespace bvam
