#include "bvam/orbit.hpp"

#include "bvam/errors.hpp"
#include "bvam/integrator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace bvam {

std::string_view to_string(OrbitStatus status) {
  switch (status) {
    case OrbitStatus::converged: return "converged";
    case OrbitStatus::not_converged: return "not_converged";
    case OrbitStatus::collapsed_to_equilibrium: return "collapsed_to_equilibrium";
  }
  return "unknown";
}

std::string_view to_string(OrbitBifurcationKind kind) {
  switch (kind) {
    case OrbitBifurcationKind::none: return "none";
    case OrbitBifurcationKind::fold: return "fold";
    case OrbitBifurcationKind::period_doubling: return "period_doubling";
    case OrbitBifurcationKind::neimark_sacker: return "neimark_sacker";
  }
  return "unknown";
}

namespace {

// Unit vector along F(reference); zero when the reference is a steady state.
Eigen::VectorXd phase_direction(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& reference) {
  Eigen::VectorXd dir = rhs_real(p, grid, reference.stacked());
  const double norm = dir.norm();
  if (norm > 0.0) dir /= norm;
  return dir;
}

Eigen::VectorXd shooting_system(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& reference, const Eigen::VectorXd& direction,
                                PhaseCondition phase, long steps, double threshold) {
  const Eigen::Index n2 = z.size() - 1;
  const double T = z[n2];
  if (!(T > 0.0) || !z.allFinite()) throw DivergenceError("invalid shooting iterate", 0.0);
  const Eigen::VectorXd x = z.head(n2);
  const Eigen::VectorXd defect = flow_map_steps(p, grid, x, T, steps, threshold) - x;
  Eigen::VectorXd out(n2 + 1);
  out.head(n2) = defect;
  out[n2] = phase == PhaseCondition::reference_offset ? (x - reference).dot(direction) : defect.dot(direction);
  return out;
}

}  // namespace

Eigen::VectorXd shooting_residual(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& candidate,
                                  const FieldPair& reference, double dt, PhaseCondition phase, long steps) {
  candidate.anchor.check(grid.size());
  reference.check(grid.size());
  if (!(candidate.period > 0.0)) throw ConfigError("orbit period must be positive");
  if (steps <= 0) steps = steps_for(candidate.period, dt);
  Eigen::VectorXd z(2 * grid.size() + 1);
  z << candidate.anchor.stacked(), candidate.period;
  return shooting_system(p, grid, z, reference.stacked(), phase_direction(p, grid, reference), phase, steps, 1e3);
}

PeriodicOrbit solve_orbit(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& guess,
                          const FieldPair& reference, const OrbitSettings& settings) {
  guess.anchor.check(grid.size());
  reference.check(grid.size());
  if (!(guess.period > 0.0)) throw ConfigError("orbit period guess must be positive");
  if (!(settings.dt > 0.0) || !(settings.tol > 0.0)) throw ConfigError("orbit dt and tolerance must be positive");

  const long steps = steps_for(guess.period, settings.dt);
  const Eigen::VectorXd ref = reference.stacked();
  const Eigen::VectorXd direction = phase_direction(p, grid, reference);
  auto f = [&](const Eigen::VectorXd& z) {
    return shooting_system(p, grid, z, ref, direction, settings.phase, steps, settings.divergence_threshold);
  };

  NewtonKrylovOptions opts = settings.newton;
  opts.tol = settings.tol;
  opts.max_iterations = settings.max_iterations;
  Eigen::VectorXd z0(2 * grid.size() + 1);
  z0 << guess.anchor.stacked(), guess.period;
  const auto nk = newton_krylov(f, z0, opts);

  PeriodicOrbit out;
  out.anchor = FieldPair::from_stacked(nk.x.head(2 * grid.size()));
  out.period = nk.x[2 * grid.size()];
  out.residual_norm = nk.residual_norm;
  out.iterations = nk.iterations;
  out.converged = nk.converged();
  out.status = out.converged ? OrbitStatus::converged : OrbitStatus::not_converged;
  if (out.anchor.u1.allFinite() && out.anchor.u2.allFinite() &&
      rhs_real(p, grid, out.anchor.stacked()).norm() < settings.collapse_threshold) {
    out.converged = false;
    out.status = OrbitStatus::collapsed_to_equilibrium;
  }
  return out;
}

namespace {

double alignment(const Eigen::VectorXcd& v, const Eigen::VectorXd& d) {
  const double scale = v.norm() * d.norm();
  return scale > 0.0 ? std::abs(v.dot(d.cast<std::complex<double>>())) / scale : 0.0;
}

MonodromyResult analyze_impl(Eigen::MatrixXd matrix, const Eigen::VectorXd* flow, const Eigen::VectorXd* shift,
                             int keep_vectors, double window) {
  const bool need_vectors = keep_vectors > 0 || flow != nullptr;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, need_vectors);
  if (solver.info() != Eigen::Success) throw Error("nonsymmetric eigensolver failed on the monodromy matrix");
  const Eigen::VectorXcd values = solver.eigenvalues();
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    return values[a].imag() > values[b].imag();
  });

  MonodromyResult out;
  out.multipliers.reserve(order.size());
  for (auto i : order) out.multipliers.push_back(values[i]);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.multipliers.size(); ++i) {
    const double gap = std::abs(out.multipliers[i] - 1.0);
    if (gap < best) {
      best = gap;
      out.trivial_index = static_cast<int>(i);
    }
  }

  if (flow != nullptr) {
    std::vector<int> near;
    for (std::size_t i = 0; i < out.multipliers.size(); ++i) {
      if (std::abs(out.multipliers[i] - 1.0) < window) near.push_back(static_cast<int>(i));
    }
    auto best_aligned = [&](const Eigen::VectorXd& d, int skip) {
      int pick = -1;
      double score = 0.0;
      for (int i : near) {
        if (i == skip) continue;
        const double a = alignment(solver.eigenvectors().col(order[i]), d);
        if (a > score) {
          score = a;
          pick = i;
        }
      }
      return std::pair{pick, score};
    };
    if (const auto [pick, score] = best_aligned(*flow, -1); pick >= 0) out.trivial_index = pick;
    // A homogeneous state has no translation mode.
    if (shift != nullptr && shift->norm() > 1e-8) {
      const auto [pick, score] = best_aligned(*shift, out.trivial_index);
      if (pick >= 0 && score > 0.5) out.symmetry_index = pick;
    }
  }

  const auto keep = std::min<Eigen::Index>(keep_vectors, values.size());
  if (keep > 0) {
    out.leading_vectors.resize(matrix.rows(), keep);
    for (Eigen::Index c = 0; c < keep; ++c) out.leading_vectors.col(c) = solver.eigenvectors().col(order[c]);
  }
  out.matrix = std::move(matrix);
  return out;
}

}  // namespace

MonodromyResult analyze_monodromy(Eigen::MatrixXd matrix, int keep_vectors) {
  return analyze_impl(std::move(matrix), nullptr, nullptr, keep_vectors, 0.0);
}

MonodromyResult analyze_monodromy(Eigen::MatrixXd matrix, const Eigen::VectorXd& flow_direction,
                                  const Eigen::VectorXd& translation_direction, int keep_vectors, double window) {
  return analyze_impl(std::move(matrix), &flow_direction, &translation_direction, keep_vectors, window);
}

Eigen::VectorXd translation_direction(const SpectralGrid& grid, const FieldPair& state) {
  state.check(grid.size());
  Eigen::VectorXd d(2 * grid.size());
  d << spectral_derivative(grid, state.u1), spectral_derivative(grid, state.u2);
  return d;
}

namespace {

MonodromyResult monodromy_impl(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& orbit,
                               double dt, double h, bool parallel) {
  orbit.anchor.check(grid.size());
  if (!(orbit.period > 0.0) || !(h > 0.0)) throw ConfigError("monodromy needs a positive period and step");
  const long steps = steps_for(orbit.period, dt);
  const Eigen::VectorXd x = orbit.anchor.stacked();
  const Eigen::VectorXd base = flow_map_steps(p, grid, x, orbit.period, steps);
  const auto dim = static_cast<long>(x.size());
  Eigen::MatrixXd m(dim, dim);
  std::atomic<bool> failed{false};
  std::string failure;

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < dim; ++i) {
    if (failed.load()) continue;
    try {
      Eigen::VectorXd start = x;
      start[i] += h;
      m.col(i) = (flow_map_steps(p, grid, start, orbit.period, steps) - base) / h;
    } catch (const DivergenceError& e) {
#pragma omp critical(bvam_monodromy_failure)
      {
        if (!failed.exchange(true)) failure = e.what();
      }
    }
  }
  if (failed) throw DivergenceError("perturbed flow diverged in monodromy column: " + failure, orbit.period);
  return analyze_monodromy(std::move(m), rhs_real(p, grid, x), translation_direction(grid, orbit.anchor));
}

}  // namespace

MonodromyResult monodromy_matrix(const ModelParameters& p, const SpectralGrid& grid, const PeriodicOrbit& orbit,
                                 double dt, double h) {
  return monodromy_impl(p, grid, orbit, dt, h, true);
}

MonodromyResult monodromy_matrix_serial(const ModelParameters& p, const SpectralGrid& grid,
                                        const PeriodicOrbit& orbit, double dt, double h) {
  return monodromy_impl(p, grid, orbit, dt, h, false);
}

OrbitBifurcation classify_orbit_bifurcation(const std::vector<std::complex<double>>& multipliers,
                                            const std::vector<int>& neutral, double tol_angle) {
  OrbitBifurcation out;
  double largest = -1.0;
  for (std::size_t i = 0; i < multipliers.size(); ++i) {
    if (std::find(neutral.begin(), neutral.end(), static_cast<int>(i)) != neutral.end()) continue;
    if (std::abs(multipliers[i]) > largest) {
      largest = std::abs(multipliers[i]);
      out.critical_multiplier = multipliers[i];
    }
  }
  if (largest <= 1.0) return out;
  const auto mu = out.critical_multiplier;
  if (std::abs(mu.imag()) <= tol_angle) {
    out.kind = mu.real() < 0.0 ? OrbitBifurcationKind::period_doubling : OrbitBifurcationKind::fold;
  } else {
    out.kind = OrbitBifurcationKind::neimark_sacker;
  }
  return out;
}

OrbitBifurcation classify_orbit_bifurcation(const MonodromyResult& result, double tol_angle) {
  std::vector<int> neutral{result.trivial_index};
  if (result.symmetry_index >= 0) neutral.push_back(result.symmetry_index);
  return classify_orbit_bifurcation(result.multipliers, neutral, tol_angle);
}

}  // namespace bvam
