// bvam: command-line driver for simulations, equilibria, orbits and attractors.

#include "bvam/config.hpp"
#include "bvam/continuation.hpp"
#include "bvam/diagnostics.hpp"
#include "bvam/equilibrium.hpp"
#include "bvam/errors.hpp"
#include "bvam/integrator.hpp"
#include "bvam/io.hpp"
#include "bvam/orbit.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace bvam;

namespace {

constexpr int kOk = 0;
constexpr int kSolverFailure = 1;
constexpr int kUsage = 2;

struct Flags {
  std::string config;
  std::string regime;
  std::optional<double> C;
  std::string out;
  std::optional<int> N;
  std::optional<double> dt;
  std::string seed_from;
};

struct Context {
  RunConfig cfg;
  std::string command_line;
  std::string seed_from;

  SpectralGrid grid() const { return SpectralGrid(cfg.N, cfg.parameters.Lx, cfg.dealias); }
  fs::path out(const std::string& name) const { return fs::path(cfg.out_dir) / name; }

  void save_meta(const fs::path& data, const SpectralGrid& g) const {
    write_metadata(data, {to_json(cfg), describe_grid(g), command_line});
  }

  OrbitSettings orbit_settings() const {
    OrbitSettings s;
    s.dt = cfg.dt;
    s.tol = cfg.orbit_tol;
    s.max_iterations = cfg.orbit_max_iterations;
    return s;
  }

  SeedSettings seed_settings() const {
    SeedSettings s;
    s.min_transient = cfg.seed_transient;
    s.max_transient = cfg.seed_max_transient;
    s.period_guess = cfg.period_guess;
    s.orbit = orbit_settings();
    return s;
  }

  EquilibriumSettings equilibrium_settings() const {
    EquilibriumSettings s;
    s.tol = cfg.newton_tol;
    s.max_iterations = cfg.newton_max_iterations;
    return s;
  }

  /// Initial state from --seed-from (x,u1,u2 CSV, resampled to N) or the cosine guess.
  FieldPair initial_state(const SpectralGrid& g) const {
    if (seed_from.empty()) {
      return cosine_guess(g, cfg.guess_amplitude1, cfg.guess_amplitude2, cfg.guess_mode1, cfg.guess_mode2);
    }
    const auto table = read_csv(seed_from);
    const auto u1 = table.numbers("u1");
    const auto u2 = table.numbers("u2");
    FieldPair s{Eigen::Map<const Eigen::VectorXd>(u1.data(), static_cast<Eigen::Index>(u1.size())),
                Eigen::Map<const Eigen::VectorXd>(u2.data(), static_cast<Eigen::Index>(u2.size()))};
    if (s.size() < 2 || s.size() % 2 != 0) throw ConfigError("seed file must hold an even number of grid points");
    return s.size() == g.size() ? s : resample(s, g.size());
  }
};

std::vector<Regime> regimes_for(const Flags& f, const RunConfig& cfg) {
  if (f.regime == "all") return {Regime::linear, Regime::self_u1, Regime::self_u2, Regime::cross};
  return {cfg.regime};
}

Context make_context(const Flags& f, const std::string& command_line, std::optional<Regime> regime) {
  if (!regime && !f.regime.empty() && f.regime != "all") regime = parse_regime(f.regime);
  Context ctx;
  ctx.cfg = f.config.empty() ? parse_config("", regime) : load_config(f.config, regime);
  if (f.C) ctx.cfg.parameters.C = *f.C;
  if (f.N) ctx.cfg.N = *f.N;
  if (f.dt) ctx.cfg.dt = *f.dt;
  if (!f.out.empty()) ctx.cfg.out_dir = f.out;
  ctx.cfg.validate();
  ctx.command_line = command_line;
  ctx.seed_from = f.seed_from;
  return ctx;
}

std::string tag(const RunConfig& cfg) { return std::string(to_string(cfg.regime)); }

int run_simulate(const Context& ctx) {
  const auto g = ctx.grid();
  IntegratorConfig ic;
  ic.dt = ctx.cfg.dt;
  ic.record_every = ctx.cfg.record_every;
  const auto traj = integrate(ctx.cfg.parameters, g, ctx.initial_state(g), ctx.cfg.t_end, ic);
  const auto path = ctx.out("simulate_" + tag(ctx.cfg) + ".csv");
  export_trajectory(traj, path);
  ctx.save_meta(path, g);
  std::printf("simulated %g time units, %zu samples, final energy %.10g -> %s\n", ctx.cfg.t_end, traj.size(),
              traj.energies.back(), path.string().c_str());
  return kOk;
}

int run_equilibrium(const Context& ctx) {
  const auto g = ctx.grid();
  const auto& p = ctx.cfg.parameters;
  const auto res = newton_krylov_solve(p, g, ctx.initial_state(g), ctx.equilibrium_settings());
  const auto state_path = ctx.out("equilibrium_" + tag(ctx.cfg) + ".csv");
  export_state(g, res.state, state_path);
  ctx.save_meta(state_path, g);
  if (!res.converged) {
    std::fprintf(stderr, "equilibrium: Newton-Krylov did not converge (%s, residual %.3e after %d iterations)\n",
                 std::string(to_string(res.status)).c_str(), res.residual_norm, res.iterations);
    return kSolverFailure;
  }
  const auto stab = stability_spectrum(p, g, res.state);
  const auto spec_path = ctx.out("equilibrium_" + tag(ctx.cfg) + "_spectrum.csv");
  export_eigenvalues(stab.eigenvalues, spec_path);
  ctx.save_meta(spec_path, g);
  std::printf("C = %g: residual %.3e after %d iterations, energy %.10g, max Re %.6e, %s%s\n", p.C,
              res.residual_norm, res.iterations, energy(p, g, res.state), stab.max_real_part,
              stab.stable ? "stable" : "unstable", stab.hopf_candidate ? " (complex leading pair)" : "");
  return kOk;
}

EquilibriumBranch sweep(const Context& ctx, const SpectralGrid& g) {
  ContinuationSettings cs;
  cs.C_start = ctx.cfg.C_start;
  cs.C_end = ctx.cfg.C_end;
  cs.steps = ctx.cfg.C_steps;
  cs.solver = ctx.equilibrium_settings();
  DiffusionRegime regime{ctx.cfg.regime, ctx.cfg.parameters};
  return continue_equilibria(regime, g, ctx.initial_state(g), cs);
}

OrbitContinuationSettings orbit_continuation(const Context& ctx, double delta) {
  OrbitContinuationSettings os;
  os.delta_C = delta;
  os.max_steps = ctx.cfg.orbit_max_steps;
  os.C_limit = ctx.cfg.C_limit;
  os.orbit = ctx.orbit_settings();
  os.monodromy_h = ctx.cfg.monodromy_h;
  os.monodromy_stride = ctx.cfg.monodromy_stride;
  return os;
}

// Runs one job per regime concurrently and returns the worst exit status.
int per_regime(const Flags& f, const std::string& cmd, const std::function<int(const Context&)>& job) {
  const Context base = make_context(f, cmd, std::nullopt);
  const auto regimes = regimes_for(f, base.cfg);
  std::vector<int> codes(regimes.size(), kOk);
  std::mutex err;
  for_each_concurrently(static_cast<int>(regimes.size()), [&](int i) {
    try {
      codes[i] = job(make_context(f, cmd, regimes[i]));
    } catch (const Error& e) {
      std::lock_guard lock(err);
      std::fprintf(stderr, "%s: %s\n", std::string(to_string(regimes[i])).c_str(), e.what());
      codes[i] = dynamic_cast<const ConfigError*>(&e) ? kUsage : kSolverFailure;
    }
  });
  int worst = kOk;
  for (int c : codes) worst = std::max(worst, c);
  return worst;
}

int run_continue_eq(const Context& ctx) {
  const auto g = ctx.grid();
  const auto branch = sweep(ctx, g);
  const auto path = ctx.out("continue_eq_" + tag(ctx.cfg) + ".csv");
  export_branch(branch, path);
  ctx.save_meta(path, g);
  std::printf("%s: %zu points, hopf index %d", tag(ctx.cfg).c_str(), branch.points.size(), branch.hopf_index);
  if (branch.hopf_index >= 0) std::printf(" (C = %g)", branch.points[branch.hopf_index].C);
  std::printf(", %d stability change(s)\n", branch.stability_changes);
  if (branch.truncated) {
    std::fprintf(stderr, "%s: branch truncated: %s\n", tag(ctx.cfg).c_str(), branch.diagnostic.c_str());
    return kSolverFailure;
  }
  return kOk;
}

void print_multipliers(const OrbitPoint& pt) {
  std::printf("  multipliers:");
  for (std::size_t i = 0; i < std::min<std::size_t>(6, pt.multipliers.size()); ++i) {
    std::printf(" (%.6f%+.6fi)", pt.multipliers[i].real(), pt.multipliers[i].imag());
  }
  std::printf("\n  critical %.6f%+.6fi -> %s\n", pt.bifurcation.critical_multiplier.real(),
              pt.bifurcation.critical_multiplier.imag(), std::string(to_string(pt.bifurcation.kind)).c_str());
}

int run_orbit(const Context& ctx) {
  const auto g = ctx.grid();
  const auto& p = ctx.cfg.parameters;
  DiffusionRegime regime{ctx.cfg.regime, p};
  PeriodicOrbit orbit;
  if (!ctx.seed_from.empty()) {
    PeriodicOrbit guess;
    guess.anchor = ctx.initial_state(g);
    guess.period = ctx.cfg.period_guess;
    orbit = solve_orbit(p, g, guess, guess.anchor, ctx.orbit_settings());
  } else {
    const auto eq = newton_krylov_solve(p, g, ctx.initial_state(g), ctx.equilibrium_settings());
    if (!eq.converged) throw ConvergenceError("no steady state to start the orbit search from");
    EquilibriumPoint pt;
    pt.C = p.C;
    pt.state = eq.state;
    pt.stability = stability_spectrum(p, g, eq.state);
    orbit = hopf_seed_orbit(regime, g, pt, ctx.seed_settings());
  }
  if (!orbit.converged) {
    std::fprintf(stderr, "orbit: shooting did not converge (%s, residual %.3e)\n",
                 std::string(to_string(orbit.status)).c_str(), orbit.residual_norm);
    return kSolverFailure;
  }
  OrbitPoint pt;
  pt.C = p.C;
  pt.orbit = orbit;
  pt.energy = energy(p, g, orbit.anchor);
  attach_monodromy(p, g, pt, ctx.cfg.dt, ctx.cfg.monodromy_h, 1e-3);

  const auto state_path = ctx.out("orbit_" + tag(ctx.cfg) + ".csv");
  export_state(g, orbit.anchor, state_path);
  ctx.save_meta(state_path, g);
  const auto mult_path = ctx.out("orbit_" + tag(ctx.cfg) + "_multipliers.csv");
  export_eigenvalues(pt.multipliers, mult_path);
  ctx.save_meta(mult_path, g);
  std::printf("C = %g: period %.8f, residual %.3e after %d iterations\n", p.C, orbit.period, orbit.residual_norm,
              orbit.iterations);
  print_multipliers(pt);
  return kOk;
}

struct OrbitFlags {
  bool second = false;
  double second_delta = -0.001;
};

int run_continue_orbit(const Context& ctx, const OrbitFlags& of) {
  const auto g = ctx.grid();
  const auto eq = sweep(ctx, g);
  if (eq.hopf_index < 0) throw ConvergenceError("no Hopf point on the equilibrium branch");
  const auto& hopf = eq.points[eq.hopf_index];
  DiffusionRegime regime{ctx.cfg.regime, ctx.cfg.parameters};
  regime.parameters.C = hopf.C;
  const auto seed = hopf_seed_orbit(regime, g, hopf, ctx.seed_settings());
  if (!seed.converged) throw ConvergenceError("orbit seeded at the Hopf point did not converge");

  const auto first = continue_orbits(regime, g, seed, orbit_continuation(ctx, ctx.cfg.delta_C));
  const auto path = ctx.out("continue_orbit_" + tag(ctx.cfg) + ".csv");
  export_branch(first, path);
  ctx.save_meta(path, g);
  std::printf("%s: first branch from C = %g, %zu points, event %s", tag(ctx.cfg).c_str(), hopf.C,
              first.points.size(), first.event_index >= 0 ? std::string(to_string(first.event)).c_str() : "none");
  if (first.event_index >= 0) std::printf(" at C = %g", first.points[first.event_index].C);
  std::printf("\n");
  if (first.truncated) std::fprintf(stderr, "%s: %s\n", tag(ctx.cfg).c_str(), first.diagnostic.c_str());
  if (!of.second) return first.truncated ? kSolverFailure : kOk;

  if (first.event != BranchEvent::period_doubling) {
    throw ConvergenceError("first branch did not end in a period doubling; no doubled branch to follow");
  }
  const auto& flagged = first.points[first.event_index];
  regime.parameters.C = flagged.C;
  const auto doubled = period_doubled_seed(regime, g, flagged, ctx.seed_settings());
  if (!doubled.converged) throw ConvergenceError("period-doubled seed did not converge");
  const auto second = continue_orbits(regime, g, doubled, orbit_continuation(ctx, of.second_delta));
  const auto path2 = ctx.out("continue_orbit_" + tag(ctx.cfg) + "_doubled.csv");
  export_branch(second, path2);
  ctx.save_meta(path2, g);
  std::printf("%s: doubled branch from C = %g, %zu points, event %s", tag(ctx.cfg).c_str(), flagged.C,
              second.points.size(), second.event_index >= 0 ? std::string(to_string(second.event)).c_str() : "none");
  if (second.event_index >= 0) std::printf(" at C = %g", second.points[second.event_index].C);
  std::printf("\n");
  if (second.truncated) std::fprintf(stderr, "%s: %s\n", tag(ctx.cfg).c_str(), second.diagnostic.c_str());
  return second.truncated ? kSolverFailure : kOk;
}

struct AttractorRun {
  Trajectory traj;
  std::vector<AttractorSample> local;
  std::vector<AttractorSample> global;
  ChaosReport chaos;
  AmplitudeSpectrum spectrum;
};

AttractorRun attractor_run(const Context& ctx, const SpectralGrid& g, const ModelParameters& p) {
  if (!(ctx.cfg.t_end > ctx.cfg.tau)) throw ConfigError("t_end must exceed the transient tau");
  IntegratorConfig ic;
  ic.dt = ctx.cfg.dt;
  ic.record_every = ctx.cfg.record_every;
  AttractorRun r;
  r.traj = integrate(p, g, ctx.initial_state(g), ctx.cfg.t_end, ic);
  r.local = local_attractor(r.traj, g, ctx.cfg.tau);
  r.global = energy_attractor(p, g, r.traj, ctx.cfg.tau);
  std::vector<double> e;
  for (const auto& s : r.global) e.push_back(s.E);
  // Last sample may come from a shortened step. Dropped to keep the spacing uniform.
  if (e.size() > 1 && r.traj.times.size() > 1) e.pop_back();
  const double spacing = ic.dt * ic.record_every;
  r.spectrum = amplitude_spectrum(e, spacing);
  r.chaos = chaos_indicator(e, spacing, ctx.cfg.broadband_threshold, ctx.cfg.bound);
  double peak = 0.0;
  for (const auto& u : r.traj.states) peak = std::max({peak, u.u1.cwiseAbs().maxCoeff(), u.u2.cwiseAbs().maxCoeff()});
  r.chaos.bounded = r.chaos.bounded && peak < ctx.cfg.bound;
  return r;
}

int run_attractor(const Context& ctx) {
  const auto g = ctx.grid();
  const auto r = attractor_run(ctx, g, ctx.cfg.parameters);
  const std::string stem = "attractor_" + tag(ctx.cfg);
  for (const auto& [name, data] : {std::pair{"_local.csv", &r.local}, std::pair{"_energy.csv", &r.global}}) {
    const auto path = ctx.out(stem + name);
    export_attractor(*data, path);
    ctx.save_meta(path, g);
  }
  const auto spec_path = ctx.out(stem + "_spectrum.csv");
  export_spectrum(r.spectrum, spec_path);
  ctx.save_meta(spec_path, g);
  std::printf("C = %g: %zu samples after tau, dominant power fraction %.4f (%s), %s, closure gap %.4e\n",
              ctx.cfg.parameters.C, r.local.size(), r.chaos.dominant_power_fraction,
              r.chaos.broadband ? "broadband" : "line spectrum", r.chaos.bounded ? "bounded" : "unbounded",
              closure_gap(r.local));
  return kOk;
}

int run_road(const Context& ctx) {
  const auto g = ctx.grid();
  CsvTable summary;
  summary.header = {"C", "dominant_power_fraction", "broadband", "bounded", "closure_gap", "E_min", "E_max"};
  for (int k = 0; k <= ctx.cfg.C_steps; ++k) {
    ModelParameters p = ctx.cfg.parameters;
    p.C = ctx.cfg.C_start + k * (ctx.cfg.C_end - ctx.cfg.C_start) / ctx.cfg.C_steps;
    const auto r = attractor_run(ctx, g, p);
    const auto path = ctx.out("road_" + tag(ctx.cfg) + "_" + std::to_string(k) + ".csv");
    export_attractor(r.local, path);
    ctx.save_meta(path, g);
    double lo = r.global.front().E;
    double hi = lo;
    for (const auto& s : r.global) {
      lo = std::min(lo, s.E);
      hi = std::max(hi, s.E);
    }
    summary.rows.push_back({format_number(p.C), format_number(r.chaos.dominant_power_fraction),
                            r.chaos.broadband ? "1" : "0", r.chaos.bounded ? "1" : "0",
                            format_number(closure_gap(r.local)), format_number(lo), format_number(hi)});
    std::printf("C = %g: dominant power fraction %.4f, closure gap %.4e\n", p.C, r.chaos.dominant_power_fraction,
                closure_gap(r.local));
  }
  const auto path = ctx.out("road_" + tag(ctx.cfg) + ".csv");
  write_csv(path, summary);
  ctx.save_meta(path, g);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Pseudospectral simulation and bifurcation analysis of the augmented BVAM model"};
  app.set_version_flag("--version", std::string(BVAM_VERSION));
  app.require_subcommand(1);

  Flags flags;
  OrbitFlags orbit_flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "configuration file (key = value)")->check(CLI::ExistingFile);
    sub->add_option("--regime", flags.regime, "linear, self_u1, self_u2, cross")
        ->check(CLI::IsMember({"linear", "self_u1", "self_u2", "cross", "all"}));
    sub->add_option("--C", flags.C, "bifurcation parameter C");
    sub->add_option("--out", flags.out, "output directory (default $BVAM_OUT_DIR or ./out)");
    sub->add_option("--N", flags.N, "number of collocation points (even)");
    sub->add_option("--dt", flags.dt, "RK4 time step");
    sub->add_option("--seed-from", flags.seed_from, "CSV with x,u1,u2 columns used as initial state")
        ->check(CLI::ExistingFile);
  };

  auto* simulate = app.add_subcommand("simulate", "integrate and export the trajectory");
  auto* equilibrium = app.add_subcommand("equilibrium", "solve for a steady state and its spectrum");
  auto* continue_eq = app.add_subcommand("continue-eq", "continue steady states in C and flag the Hopf point");
  auto* orbit = app.add_subcommand("orbit", "find one periodic orbit and its Floquet multipliers");
  auto* continue_orbit = app.add_subcommand("continue-orbit", "continue periodic orbits from the Hopf point");
  auto* attractor = app.add_subcommand("attractor", "local and energy attractors with the energy spectrum");
  auto* road = app.add_subcommand("road", "attractors along a sweep of C");
  for (auto* s : {simulate, equilibrium, continue_eq, orbit, continue_orbit, attractor, road}) add_common(s);
  continue_orbit->add_flag("--second", orbit_flags.second, "also follow the period-doubled branch");
  continue_orbit->add_option("--second-delta", orbit_flags.second_delta, "C step on the period-doubled branch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*continue_eq) return per_regime(flags, command_line, run_continue_eq);
    if (*continue_orbit) {
      return per_regime(flags, command_line, [&](const Context& c) { return run_continue_orbit(c, orbit_flags); });
    }
    if (flags.regime == "all") throw ConfigError("--regime all is only supported by continue-eq and continue-orbit");
    const Context ctx = make_context(flags, command_line, std::nullopt);
    if (*simulate) return run_simulate(ctx);
    if (*equilibrium) return run_equilibrium(ctx);
    if (*orbit) return run_orbit(ctx);
    if (*attractor) return run_attractor(ctx);
    if (*road) return run_road(ctx);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kUsage;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kSolverFailure;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverFailure;
  }
  return kUsage;
}
