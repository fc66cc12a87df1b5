#pragma once

#include "bvam/model.hpp"
#include "bvam/spectral.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace bvam {

struct IntegratorConfig {
  double dt = 5e-4;
  int record_every = 1;
  double divergence_threshold = 1e3;

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<FieldPair> states;
  std::vector<double> energies;

  std::size_t size() const { return times.size(); }
};

/// Classical RK4 on the stacked real-space state.
///
/// The Fourier transform is linear, so stepping the collocation values is the same
/// scheme as stepping the Fourier coefficients; only the final rounding differs.
class Rk4Stepper {
 public:
  Rk4Stepper(const ModelParameters& p, const SpectralGrid& grid);

  /// y <- y + dt/6 (k1 + 2 k2 + 2 k3 + k4).
  void step(Eigen::VectorXd& y, double dt);

  /// Advance `steps` steps of size dt. Throws DivergenceError (with the blow-up
  /// time, offset by t0) once any |value| exceeds `threshold` or turns non-finite.
  void advance(Eigen::VectorXd& y, double dt, long steps, double threshold = 1e3, double t0 = 0.0);

 private:
  ModelParameters p_;
  SpectralGrid grid_;
  RhsWorkspace work_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, stage_;
};

/// Throws DivergenceError if any entry is non-finite or exceeds `threshold` in magnitude.
void check_divergence(const Eigen::VectorXd& y, double threshold, double time);

FieldPair rk4_step(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state, double dt,
                   double threshold = 1e3);

/// Samples every `record_every` steps plus the final state; the last step is
/// shortened so the trajectory ends exactly at t_end.
Trajectory integrate(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state0, double t_end,
                     const IntegratorConfig& cfg);

/// Streaming variant: `observe(t, y)` is called at t = 0 and then at every
/// `record_every`-th step and at t_end, on the stacked state.
void integrate_observed(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y0,
                        double t_end, const IntegratorConfig& cfg,
                        const std::function<void(double, const Eigen::VectorXd&)>& observe);

/// Number of equal steps used to reach T exactly: ceil(T / dt).
long steps_for(double T, double dt);

/// phi^T(state0) with dt shrunk to T / ceil(T / dt). Bitwise deterministic.
FieldPair flow_map(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state0, double T, double dt,
                   double threshold = 1e3);

/// Stacked-state flow with an explicit step count (dt = T / steps).
Eigen::VectorXd flow_map_steps(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y0,
                               double T, long steps, double threshold = 1e3);

}  // namespace bvam
