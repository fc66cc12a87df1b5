#include "bvam/continuation.hpp"

#include "bvam/errors.hpp"
#include "bvam/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <sstream>

namespace bvam {

std::string_view to_string(BranchKind kind) {
  return kind == BranchKind::equilibrium ? "equilibrium" : "orbit";
}

std::string_view to_string(BranchEvent event) {
  switch (event) {
    case BranchEvent::none: return "";
    case BranchEvent::hopf: return "hopf";
    case BranchEvent::fold: return "fold";
    case BranchEvent::period_doubling: return "period_doubling";
    case BranchEvent::neimark_sacker: return "neimark_sacker";
  }
  return "";
}

BranchEvent event_from(OrbitBifurcationKind kind) {
  switch (kind) {
    case OrbitBifurcationKind::none: return BranchEvent::none;
    case OrbitBifurcationKind::fold: return BranchEvent::fold;
    case OrbitBifurcationKind::period_doubling: return BranchEvent::period_doubling;
    case OrbitBifurcationKind::neimark_sacker: return BranchEvent::neimark_sacker;
  }
  return BranchEvent::none;
}

namespace {

// Reaches C_to from a solution at C_from. Each failure splits the remaining
// interval in two, at most max_depth levels deep.
template <class Solution, class Solve>
std::optional<Solution> reach(const Solution& from, double C_from, double C_to, int depth, int max_depth,
                              const Solve& solve) {
  if (auto direct = solve(from, C_to)) return direct;
  if (depth >= max_depth) return std::nullopt;
  const double mid = 0.5 * (C_from + C_to);
  auto half = reach(from, C_from, mid, depth + 1, max_depth, solve);
  if (!half) return std::nullopt;
  return reach(*half, mid, C_to, depth + 1, max_depth, solve);
}

std::string format_C(double C) {
  std::ostringstream s;
  s.precision(6);
  s << C;
  return s.str();
}

Eigen::VectorXd real_direction(const Eigen::VectorXcd& v) {
  Eigen::VectorXd d = v.real();
  if (d.cwiseAbs().maxCoeff() < 1e-3 * v.cwiseAbs().maxCoeff()) d = v.imag();
  const double scale = d.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw ConvergenceError("degenerate perturbation direction");
  return d / scale;
}

}  // namespace

EquilibriumBranch continue_equilibria(const DiffusionRegime& regime, const SpectralGrid& grid,
                                      const FieldPair& initial_guess, const ContinuationSettings& settings) {
  if (settings.steps < 1) throw ConfigError("continuation needs at least one step");
  initial_guess.check(grid.size());

  EquilibriumBranch branch;
  branch.regime = regime;
  ModelParameters p = regime.parameters;

  struct Solved {
    FieldPair state;
    EquilibriumResult result;
  };
  auto solve = [&](const Solved& from, double C) -> std::optional<Solved> {
    ModelParameters q = p;
    q.C = C;
    try {
      auto r = newton_krylov_solve(q, grid, from.state, settings.solver);
      if (!r.converged) return std::nullopt;
      return Solved{r.state, r};
    } catch (const DivergenceError&) {
      return std::nullopt;
    }
  };

  Solved current{initial_guess, {}};
  double C_prev = settings.C_start;
  for (int k = 0; k <= settings.steps; ++k) {
    const double C = settings.C_start + k * (settings.C_end - settings.C_start) / settings.steps;
    std::optional<Solved> next =
        k == 0 ? solve(current, C) : reach(current, C_prev, C, 0, settings.max_halvings, solve);
    if (!next) {
      branch.truncated = true;
      branch.diagnostic = "equilibrium solve failed at C = " + format_C(C);
      break;
    }
    current = *next;
    C_prev = C;

    EquilibriumPoint pt;
    pt.C = C;
    pt.state = current.state;
    p.C = C;
    pt.energy = energy(p, grid, pt.state);
    pt.residual_norm = current.result.residual_norm;
    pt.iterations = current.result.iterations;
    pt.stability = stability_spectrum(p, grid, pt.state, settings.stability_threshold, settings.imag_tol);
    if (!branch.points.empty()) {
      const auto& last = branch.points.back().stability;
      if (last.stable != pt.stability.stable) ++branch.stability_changes;
      if (branch.hopf_index < 0 && last.stable && !pt.stability.stable && pt.stability.hopf_candidate) {
        branch.hopf_index = static_cast<int>(branch.points.size());
        pt.event = BranchEvent::hopf;
      }
    }
    branch.points.push_back(std::move(pt));
  }
  return branch;
}

void attach_monodromy(const ModelParameters& p, const SpectralGrid& grid, OrbitPoint& point, double dt, double h,
                      double tol_angle) {
  const auto mono = monodromy_matrix(p, grid, point.orbit, dt, h);
  point.has_monodromy = true;
  point.multipliers = mono.multipliers;
  point.trivial_index = mono.trivial_index;
  point.symmetry_index = mono.symmetry_index;
  point.bifurcation = classify_orbit_bifurcation(mono, tol_angle);
  point.event = event_from(point.bifurcation.kind);

  // Locate the critical multiplier (and its degenerate copies) among the kept eigenvectors.
  const auto crit = point.bifurcation.critical_multiplier;
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < mono.leading_vectors.cols(); ++c) {
    if (c == mono.trivial_index || c == mono.symmetry_index) continue;
    if (std::abs(mono.multipliers[c] - crit) <= 1e-6 * std::max(1.0, std::abs(crit))) cols.push_back(c);
  }
  point.critical_vector.resize(0);
  point.critical_space.resize(2 * grid.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) point.critical_space.col(k) = mono.leading_vectors.col(cols[k]);
  if (!cols.empty()) point.critical_vector = point.critical_space.col(0);
}

OrbitBranch continue_orbits(const DiffusionRegime& regime, const SpectralGrid& grid, const PeriodicOrbit& start,
                            const OrbitContinuationSettings& settings) {
  if (!start.converged) throw ConfigError("orbit continuation needs a converged starting orbit");
  if (settings.delta_C == 0.0) throw ConfigError("delta_C must be nonzero");
  if (settings.monodromy_stride < 1) throw ConfigError("monodromy_stride must be at least 1");

  OrbitBranch branch;
  branch.regime = regime;
  const ModelParameters base = regime.parameters;
  const double C0 = base.C;

  auto params_at = [&](double C) {
    ModelParameters q = base;
    q.C = C;
    return q;
  };
  std::string failure;
  auto solve = [&](const PeriodicOrbit& from, double C) -> std::optional<PeriodicOrbit> {
    try {
      auto o = solve_orbit(params_at(C), grid, from, from.anchor, settings.orbit);
      if (o.converged) return o;
      failure = o.status == OrbitStatus::collapsed_to_equilibrium ? "orbit collapsed onto an equilibrium"
                                                                  : "orbit solve did not converge";
    } catch (const DivergenceError& e) {
      failure = e.what();
    }
    return std::nullopt;
  };

  auto make_point = [&](double C, const PeriodicOrbit& orbit) {
    OrbitPoint pt;
    pt.C = C;
    pt.orbit = orbit;
    pt.energy = energy(params_at(C), grid, orbit.anchor);
    return pt;
  };

  // Returns true when the point is unstable.
  auto evaluate = [&](int i) {
    auto& pt = branch.points[i];
    if (!pt.has_monodromy) {
      attach_monodromy(params_at(pt.C), grid, pt, settings.orbit.dt, settings.monodromy_h, settings.tol_angle);
    }
    return pt.bifurcation.kind != OrbitBifurcationKind::none;
  };

  int last_stable = -1;
  // Evaluates point i; on instability bisects back to the first unstable point.
  auto check = [&](int i) {
    if (!evaluate(i)) {
      last_stable = i;
      return false;
    }
    int lo = last_stable;
    int hi = i;
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (evaluate(mid)) hi = mid; else lo = mid;
    }
    branch.event_index = hi;
    branch.event = branch.points[hi].event;
    return true;
  };

  branch.points.push_back(make_point(C0, start));
  bool unstable = false;
  try {
    unstable = check(0);
    for (int step = 1; step <= settings.max_steps && !(unstable && settings.stop_at_instability); ++step) {
      const double C = C0 + step * settings.delta_C;
      if ((settings.delta_C < 0.0 && C < settings.C_limit) || (settings.delta_C > 0.0 && C > settings.C_limit)) break;
      const auto& prev = branch.points.back();
      auto next = reach(prev.orbit, prev.C, C, 0, settings.max_halvings, solve);
      if (!next) {
        branch.truncated = true;
        branch.diagnostic = failure + " at C = " + format_C(C);
        break;
      }
      branch.points.push_back(make_point(C, *next));
      const int i = static_cast<int>(branch.points.size()) - 1;
      if (i % settings.monodromy_stride == 0) unstable = check(i);
    }
    const int last = static_cast<int>(branch.points.size()) - 1;
    if (!unstable && !branch.points[last].has_monodromy) unstable = check(last);
  } catch (const DivergenceError& e) {
    branch.truncated = true;
    branch.diagnostic = std::string("monodromy failed: ") + e.what();
  }

  if (unstable && settings.stop_at_instability) branch.points.resize(branch.event_index + 1);
  return branch;
}

SaturatedTransient saturate(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& start,
                            const SeedSettings& settings) {
  start.check(grid.size());
  const double dt = settings.orbit.dt;
  const long per_sample = std::max(1L, std::lround(settings.sample_interval / dt));
  const double window = std::max(4.0 * settings.period_guess, 10.0);
  const long samples_per_window = std::max(4L, std::lround(window / (per_sample * dt)));

  Rk4Stepper stepper(p, grid);
  Eigen::VectorXd y = start.stacked();
  double t = 0.0;
  std::vector<double> prev_energy;
  std::vector<double> cur_energy;
  std::vector<double> cur_times;
  double prev_swing = -1.0;

  while (t < settings.max_transient) {
    prev_energy.swap(cur_energy);
    cur_energy.clear();
    cur_times.clear();
    for (long s = 0; s < samples_per_window; ++s) {
      stepper.advance(y, dt, per_sample, settings.orbit.divergence_threshold, t);
      t += per_sample * dt;
      cur_energy.push_back(energy(p, grid, FieldPair::from_stacked(y)));
      cur_times.push_back(t);
    }
    const auto [lo, hi] = std::minmax_element(cur_energy.begin(), cur_energy.end());
    const double swing = *hi - *lo;
    if (swing < 1e-9 * (1.0 + std::abs(*hi))) {
      throw ConvergenceError("no periodicity: trajectory decays to an equilibrium");
    }
    const bool settled = prev_swing > 0.0 && std::abs(swing - prev_swing) < settings.saturation_tol * swing;
    prev_swing = swing;
    if (!settled || t < settings.min_transient) continue;

    // Spacing of the near-global maxima of the window.
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < cur_energy.size(); ++i) {
      if (cur_energy[i] > cur_energy[i - 1] && cur_energy[i] >= cur_energy[i + 1] &&
          cur_energy[i] > *hi - 0.01 * swing) {
        peaks.push_back(cur_times[i]);
      }
    }
    SaturatedTransient out;
    out.state = FieldPair::from_stacked(y);
    out.time = t;
    out.swing = swing;
    out.peak_spacing =
        peaks.size() >= 2 ? (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1) : 0.0;
    return out;
  }
  throw ConvergenceError("no periodicity: oscillation did not settle within the transient budget");
}

PeriodicOrbit hopf_seed_orbit(const DiffusionRegime& regime, const SpectralGrid& grid,
                              const EquilibriumPoint& hopf_point, const SeedSettings& settings) {
  ModelParameters p = regime.parameters;
  p.C = hopf_point.C;
  if (hopf_point.stability.stable || hopf_point.stability.leading_eigenvector.size() != 2 * grid.size()) {
    throw ConvergenceError("no periodicity: the seed point is not an unstable equilibrium");
  }
  const Eigen::VectorXd dir = real_direction(hopf_point.stability.leading_eigenvector);
  const FieldPair start = FieldPair::from_stacked(hopf_point.state.stacked() + settings.perturbation * dir);
  const auto transient = saturate(p, grid, start, settings);

  PeriodicOrbit guess;
  guess.anchor = transient.state;
  const double measured = transient.peak_spacing;
  // Trust the measured spacing unless it is far from the nominal period.
  guess.period = measured > 0.5 * settings.period_guess && measured < 1.5 * settings.period_guess
                     ? measured
                     : settings.period_guess;
  return solve_orbit(p, grid, guess, guess.anchor, settings.orbit);
}

namespace {

// Perturb the base cycle along `dir`, wait for the flip mode to saturate, shoot at 2T.
PeriodicOrbit doubled_from(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& base,
                           const Eigen::VectorXd& dir, const SeedSettings& settings) {
  const double base_period = base.period;
  // The energy swing barely sees the flip mode, so wait on the half-period defect
  // |phi^T0(y) - y| instead: it grows like |mu|^k, then levels off on the new cycle.
  const double dt = settings.orbit.dt;
  const long steps = steps_for(base_period, dt);
  Rk4Stepper stepper(p, grid);
  Eigen::VectorXd y = base.anchor.stacked() + settings.perturbation * dir;
  std::vector<double> defect;
  double t = 0.0;
  int calm = 0;
  bool settled = false;
  while (t < settings.max_transient && !settled) {
    const Eigen::VectorXd before = y;
    stepper.advance(y, base_period / steps, steps, settings.orbit.divergence_threshold, t);
    t += base_period;
    defect.push_back((y - before).norm());
    const std::size_t k = defect.size();
    // Compare two base periods apart so the alternation of a 2T cycle cancels.
    if (k >= 3 && t >= settings.min_transient) {
      const double d = defect[k - 1];
      const bool flat = std::abs(d - defect[k - 3]) < 10.0 * settings.saturation_tol * d;
      calm = flat && d > 10.0 * settings.orbit.tol ? calm + 1 : 0;
      settled = calm >= 4;
    }
  }
  if (!settled) throw ConvergenceError("no period-doubled cycle: the flip mode did not saturate");

  PeriodicOrbit guess;
  guess.anchor = FieldPair::from_stacked(y);
  guess.period = 2.0 * base_period;
  auto orbit = solve_orbit(p, grid, guess, guess.anchor, settings.orbit);
  if (!orbit.converged) throw ConvergenceError("period-doubled shooting did not converge");
  const auto half = flow_map(p, grid, orbit.anchor, 0.5 * orbit.period, dt);
  if ((half.stacked() - orbit.anchor.stacked()).norm() <= 10.0 * settings.orbit.tol) {
    throw ConvergenceError("period-doubled seed fell back onto the base cycle traversed twice");
  }
  return orbit;
}

}  // namespace

PeriodicOrbit period_doubled_seed(const DiffusionRegime& regime, const SpectralGrid& grid,
                                  const OrbitPoint& flagged_point, const SeedSettings& settings) {
  ModelParameters p = regime.parameters;
  p.C = flagged_point.C;
  Eigen::MatrixXcd space = flagged_point.critical_space;
  if (space.cols() == 0 && flagged_point.critical_vector.size() > 0) space = flagged_point.critical_vector;
  if (space.cols() == 0 || space.rows() != 2 * grid.size()) {
    throw ConvergenceError("flagged orbit point carries no critical Floquet vector");
  }

  std::vector<Eigen::VectorXd> dirs;
  for (Eigen::Index c = 0; c < space.cols(); ++c) dirs.push_back(real_direction(space.col(c)));
  const std::size_t basis = dirs.size();
  for (std::size_t i = 0; i < basis; ++i) {
    for (std::size_t j = i + 1; j < basis; ++j) {
      dirs.push_back((dirs[i] + dirs[j]) / (dirs[i] + dirs[j]).cwiseAbs().maxCoeff());
      dirs.push_back((dirs[i] - dirs[j]) / (dirs[i] - dirs[j]).cwiseAbs().maxCoeff());
    }
  }

  std::optional<PeriodicOrbit> best;
  double best_modulus = std::numeric_limits<double>::infinity();
  std::string failure;
  for (const auto& dir : dirs) {
    PeriodicOrbit orbit;
    try {
      orbit = doubled_from(p, grid, flagged_point.orbit, dir, settings);
    } catch (const ConvergenceError& e) {
      failure = e.what();
      continue;
    }
    if (dirs.size() == 1) return orbit;
    OrbitPoint pt;
    pt.C = p.C;
    pt.orbit = orbit;
    attach_monodromy(p, grid, pt, settings.orbit.dt, settings.monodromy_h, 1e-3);
    const double modulus = std::abs(pt.bifurcation.critical_multiplier);
    if (pt.bifurcation.kind == OrbitBifurcationKind::none) return orbit;
    if (modulus < best_modulus) {
      best_modulus = modulus;
      best = orbit;
    }
  }
  if (best) return *best;
  throw ConvergenceError(failure.empty() ? "no period-doubled cycle found" : failure);
}

void for_each_concurrently(int count, const std::function<void(int)>& work) {
  std::vector<std::future<void>> jobs;
  jobs.reserve(count);
  for (int i = 0; i < count; ++i) jobs.push_back(std::async(std::launch::async, work, i));
  for (auto& j : jobs) j.get();
}

}  // namespace bvam
