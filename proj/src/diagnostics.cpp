#include "bvam/diagnostics.hpp"

#include "bvam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bvam {

namespace {

std::vector<AttractorSample> sample_after(const Trajectory& traj, const SpectralGrid& grid, double tau) {
  if (traj.size() == 0) throw ConfigError("empty trajectory");
  const double t_end = traj.times.back();
  if (!(tau < t_end)) throw ConfigError("transient tau must lie before the final time");
  const int c = grid.center_index();
  std::vector<AttractorSample> out;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < tau) continue;
    traj.states[i].check(grid.size());
    AttractorSample s;
    s.t = traj.times[i];
    s.u1_center = traj.states[i].u1[c];
    s.u2_center = traj.states[i].u2[c];
    s.E = i < traj.energies.size() ? traj.energies[i] : std::numeric_limits<double>::quiet_NaN();
    s.dEdt = std::numeric_limits<double>::quiet_NaN();
    s.t_norm = (s.t - tau) / (t_end - tau);
    out.push_back(s);
  }
  return out;
}

double point_segment(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax;
  const double vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double s = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::hypot(px - ax - s * vx, py - ay - s * vy);
}

}  // namespace

std::vector<AttractorSample> local_attractor(const Trajectory& traj, const SpectralGrid& grid, double tau) {
  return sample_after(traj, grid, tau);
}

std::vector<AttractorSample> energy_attractor(const ModelParameters& p, const SpectralGrid& grid,
                                              const Trajectory& traj, double tau) {
  auto out = sample_after(traj, grid, tau);
  std::size_t k = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < tau) continue;
    out[k].E = energy(p, grid, traj.states[i]);
    out[k].dEdt = energy_dissipation_rhs(p, grid, traj.states[i]);
    ++k;
  }
  return out;
}

ChaosReport chaos_indicator(std::span<const double> signal, double sample_dt, double broadband_threshold,
                            double bound) {
  if (signal.size() < kMinChaosSamples) throw ConfigError("chaos indicator needs at least 1024 samples");
  if (!(sample_dt > 0.0)) throw ConfigError("sample spacing must be positive");
  ChaosReport r;
  for (double v : signal) r.max_abs = std::max(r.max_abs, std::abs(v));
  r.bounded = std::isfinite(r.max_abs) && r.max_abs < bound;

  const auto spec = amplitude_spectrum(signal, sample_dt);
  const Eigen::VectorXd power = spec.amplitude.array().square();
  const double total = power.sum();
  r.dominant_power_fraction = total > 0.0 ? power.maxCoeff() / total : 1.0;
  r.broadband = r.dominant_power_fraction < broadband_threshold;
  return r;
}

double closure_gap(const std::vector<AttractorSample>& samples) {
  const std::size_t n = samples.size();
  if (n < 8) throw ConfigError("closure gap needs at least 8 samples");
  const std::size_t q = n / 4;
  double worst = 0.0;
  for (std::size_t i = n - q; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < q; ++j) {
      best = std::min(best, point_segment(samples[i].u1_center, samples[i].u2_center, samples[j].u1_center,
                                          samples[j].u2_center, samples[j + 1].u1_center, samples[j + 1].u2_center));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<double> energy_rate_fd(const Trajectory& traj) {
  const std::size_t n = traj.energies.size();
  if (n < 2 || traj.times.size() != n) throw ConfigError("need at least two recorded energies");
  std::vector<double> out(n);
  out[0] = (traj.energies[1] - traj.energies[0]) / (traj.times[1] - traj.times[0]);
  out[n - 1] = (traj.energies[n - 1] - traj.energies[n - 2]) / (traj.times[n - 1] - traj.times[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (traj.energies[i + 1] - traj.energies[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
  }
  return out;
}

}  // namespace bvam
