#include "bvam/integrator.hpp"

#include "bvam/errors.hpp"

#include <cmath>
#include <sstream>

namespace bvam {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (record_every < 1) throw ConfigError("record_every must be at least 1");
  if (!(divergence_threshold > 0.0)) throw ConfigError("divergence threshold must be positive");
}

Rk4Stepper::Rk4Stepper(const ModelParameters& p, const SpectralGrid& grid)
    : p_(p), grid_(grid), work_(grid), k1_(2 * grid.size()), k2_(2 * grid.size()), k3_(2 * grid.size()),
      k4_(2 * grid.size()), stage_(2 * grid.size()) {}

void Rk4Stepper::step(Eigen::VectorXd& y, double dt) {
  const double half = 0.5 * dt;
  rhs_real(p_, grid_, y, k1_, work_);
  stage_ = y + half * k1_;
  rhs_real(p_, grid_, stage_, k2_, work_);
  stage_ = y + half * k2_;
  rhs_real(p_, grid_, stage_, k3_, work_);
  stage_ = y + dt * k3_;
  rhs_real(p_, grid_, stage_, k4_, work_);
  y += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

void check_divergence(const Eigen::VectorXd& y, double threshold, double time) {
  const double peak = y.cwiseAbs().maxCoeff();
  if (!(peak <= threshold)) {
    std::ostringstream msg;
    msg << "trajectory diverged at t = " << time << " (max |u| = " << peak << ")";
    throw DivergenceError(msg.str(), time);
  }
}

void Rk4Stepper::advance(Eigen::VectorXd& y, double dt, long steps, double threshold, double t0) {
  for (long i = 0; i < steps; ++i) {
    step(y, dt);
    check_divergence(y, threshold, t0 + (i + 1) * dt);
  }
}

FieldPair rk4_step(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state, double dt,
                   double threshold) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  state.check(grid.size());
  Eigen::VectorXd y = state.stacked();
  check_divergence(y, threshold, 0.0);
  Rk4Stepper stepper(p, grid);
  stepper.advance(y, dt, 1, threshold);
  return FieldPair::from_stacked(y);
}

void integrate_observed(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y0,
                        double t_end, const IntegratorConfig& cfg,
                        const std::function<void(double, const Eigen::VectorXd&)>& observe) {
  cfg.validate();
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (y0.size() != 2 * grid.size()) throw DimensionError("initial state does not match grid");
  Eigen::VectorXd y = y0;
  check_divergence(y, cfg.divergence_threshold, 0.0);
  observe(0.0, y);

  Rk4Stepper stepper(p, grid);
  auto full = static_cast<long>(std::floor(t_end / cfg.dt));
  double remainder = t_end - full * cfg.dt;
  // Absorb a remainder that is rounding noise rather than a real partial step.
  if (remainder < 1e-9 * cfg.dt) {
    remainder = 0.0;
  } else if (cfg.dt - remainder < 1e-9 * cfg.dt) {
    ++full;
    remainder = 0.0;
  }
  for (long i = 1; i <= full; ++i) {
    stepper.step(y, cfg.dt);
    const double t = (remainder == 0.0 && i == full) ? t_end : i * cfg.dt;
    check_divergence(y, cfg.divergence_threshold, t);
    if (i % cfg.record_every == 0 || (i == full && remainder == 0.0)) observe(t, y);
  }
  if (remainder > 0.0) {
    stepper.step(y, remainder);
    check_divergence(y, cfg.divergence_threshold, t_end);
    observe(t_end, y);
  }
}

Trajectory integrate(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state0, double t_end,
                     const IntegratorConfig& cfg) {
  state0.check(grid.size());
  Trajectory traj;
  integrate_observed(p, grid, state0.stacked(), t_end, cfg, [&](double t, const Eigen::VectorXd& y) {
    traj.times.push_back(t);
    traj.states.push_back(FieldPair::from_stacked(y));
    traj.energies.push_back(energy(p, grid, traj.states.back()));
  });
  return traj;
}

long steps_for(double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw ConfigError("flow time and step must be positive");
  // Tolerate T being a hair above a multiple of dt.
  return std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
}

Eigen::VectorXd flow_map_steps(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y0,
                               double T, long steps, double threshold) {
  if (!(T > 0.0) || steps < 1) throw ConfigError("flow time and step count must be positive");
  if (y0.size() != 2 * grid.size()) throw DimensionError("initial state does not match grid");
  Eigen::VectorXd y = y0;
  Rk4Stepper stepper(p, grid);
  stepper.advance(y, T / steps, steps, threshold);
  return y;
}

FieldPair flow_map(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state0, double T, double dt,
                   double threshold) {
  state0.check(grid.size());
  return FieldPair::from_stacked(flow_map_steps(p, grid, state0.stacked(), T, steps_for(T, dt), threshold));
}

}  // namespace bvam
