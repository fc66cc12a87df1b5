#include "bvam/equilibrium.hpp"

#include "bvam/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <string>

namespace bvam {

Eigen::VectorXd residual(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state) {
  state.check(grid.size());
  if (!state.u1.allFinite() || !state.u2.allFinite()) throw DivergenceError("non-finite state in residual", 0.0);
  return rhs_real(p, grid, state.stacked());
}

FieldPair cosine_guess(const SpectralGrid& grid, double amplitude1, double amplitude2, int mode1, int mode2) {
  const double k0 = std::numbers::pi / grid.half_length();
  const auto& x = grid.points();
  FieldPair guess = FieldPair::zeros(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    guess.u1[j] = amplitude1 * std::cos(k0 * mode1 * x[j]);
    guess.u2[j] = amplitude2 * std::cos(k0 * mode2 * x[j]);
  }
  return guess;
}

LinearOperator diffusion_preconditioner(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state,
                                        double shift) {
  state.check(grid.size());
  const int n = grid.size();
  // Mean diagonal mobility of each species.
  double mean_d[2] = {0.0, 0.0};
  for (int j = 0; j < n; ++j) {
    const auto jm = potential_jacobian(p, state.u1[j], state.u2[j]);
    mean_d[0] += jm(0, 0) / n;
    mean_d[1] += jm(1, 1) / n;
  }
  const Eigen::VectorXd k2 = grid.half_k2();
  return [grid, k2, shift, d0 = mean_d[0], d1 = mean_d[1]](const Eigen::VectorXd& v) {
    const int n = grid.size();
    const int nh = grid.half_size();
    std::vector<Complex> spec(nh), scratch(nh);
    Eigen::VectorXd out(2 * n);
    const double d[2] = {d0, d1};
    for (int s = 0; s < 2; ++s) {
      grid.raw_forward(v.data() + s * n, spec.data());
      for (int m = 0; m < nh; ++m) spec[m] /= -(shift + k2[m] * d[s]) * n;
      grid.raw_inverse(spec.data(), out.data() + s * n, scratch.data());
    }
    return out;
  };
}

EquilibriumResult newton_krylov_solve(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& guess,
                                      const EquilibriumSettings& settings) {
  guess.check(grid.size());
  if (!(settings.tol > 0.0)) throw ConfigError("Newton tolerance must be positive");
  NewtonKrylovOptions opts = settings.newton;
  opts.tol = settings.tol;
  opts.max_iterations = settings.max_iterations;

  RhsWorkspace work(grid);
  auto f = [&](const Eigen::VectorXd& y) {
    if (!y.allFinite()) throw DivergenceError("non-finite Newton iterate", 0.0);
    Eigen::VectorXd out;
    rhs_real(p, grid, y, out, work);
    return out;
  };
  if (!opts.preconditioner) opts.preconditioner = diffusion_preconditioner(p, grid, guess);
  const auto nk = newton_krylov(f, guess.stacked(), opts);
  EquilibriumResult out;
  out.state = nk.x.size() == 2 * grid.size() ? FieldPair::from_stacked(nk.x) : guess;
  out.residual_norm = nk.residual_norm;
  out.iterations = nk.iterations;
  out.status = nk.status;
  out.converged = nk.converged();
  return out;
}

EquilibriumResult newton_krylov_solve(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& guess,
                                      double tol, int max_iterations) {
  EquilibriumSettings settings;
  settings.tol = tol;
  settings.max_iterations = max_iterations;
  return newton_krylov_solve(p, grid, guess, settings);
}

namespace {

void check_dense_guard(const SpectralGrid& grid) {
  if (grid.size() > kDenseGridLimit) {
    throw DimensionError("dense assembly limited to N <= " + std::to_string(kDenseGridLimit) + ", got N = " +
                         std::to_string(grid.size()));
  }
}

void laplacian_column(const SpectralGrid& grid, int col, double* out) {
  const int n = grid.size();
  const int nh = grid.half_size();
  std::vector<double> unit(n, 0.0);
  std::vector<Complex> spec(nh), scratch(nh);
  unit[col] = 1.0;
  grid.raw_forward(unit.data(), spec.data());
  const auto& k2 = grid.half_k2();
  for (int m = 0; m < nh; ++m) spec[m] *= -k2[m] / n;
  grid.raw_inverse(spec.data(), out, scratch.data());
}

// Fill the linearization given the dense Laplacian.
Eigen::MatrixXd linearization_from(const ModelParameters& p, const Eigen::MatrixXd& lap, const FieldPair& state,
                                   bool parallel) {
  const Eigen::Index n = state.size();
  std::vector<Eigen::Matrix2d> jr(n), jm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    jr[j] = reaction_jacobian(p, state.u1[j], state.u2[j]);
    jm[j] = potential_jacobian(p, state.u1[j], state.u2[j]);
  }
  Eigen::MatrixXd L(2 * n, 2 * n);
  const auto total = static_cast<long>(2 * n);
#pragma omp parallel for schedule(static) if (parallel)
  for (long c = 0; c < total; ++c) {
    const Eigen::Index species = c / n;
    const Eigen::Index j = c % n;
    for (Eigen::Index row_species = 0; row_species < 2; ++row_species) {
      auto block = L.col(c).segment(row_species * n, n);
      block = lap.col(j) * jm[j](row_species, species);
      block[j] += jr[j](row_species, species);
    }
  }
  return L;
}

}  // namespace

Eigen::MatrixXd laplacian_matrix(const SpectralGrid& grid) {
  check_dense_guard(grid);
  const int n = grid.size();
  Eigen::MatrixXd lap(n, n);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n; ++c) laplacian_column(grid, c, lap.col(c).data());
  return lap;
}

Eigen::MatrixXd laplacian_matrix_serial(const SpectralGrid& grid) {
  check_dense_guard(grid);
  const int n = grid.size();
  Eigen::MatrixXd lap(n, n);
  for (int c = 0; c < n; ++c) laplacian_column(grid, c, lap.col(c).data());
  return lap;
}

Eigen::MatrixXd assemble_linearization(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state) {
  state.check(grid.size());
  return linearization_from(p, laplacian_matrix(grid), state, true);
}

Eigen::MatrixXd assemble_linearization_serial(const ModelParameters& p, const SpectralGrid& grid,
                                              const FieldPair& state) {
  state.check(grid.size());
  return linearization_from(p, laplacian_matrix_serial(grid), state, false);
}

StabilityReport classify_spectrum(std::vector<std::complex<double>> eigenvalues, double threshold, double imag_tol) {
  std::stable_sort(eigenvalues.begin(), eigenvalues.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  StabilityReport report;
  report.eigenvalues = std::move(eigenvalues);
  report.threshold = threshold;
  if (report.eigenvalues.empty()) return report;
  report.max_real_part = report.eigenvalues.front().real();
  report.stable = report.max_real_part < threshold;
  report.hopf_candidate = std::abs(report.eigenvalues.front().imag()) > imag_tol;
  return report;
}

StabilityReport stability_spectrum(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state,
                                   double threshold, double imag_tol) {
  const Eigen::MatrixXd L = assemble_linearization(p, grid, state);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(L, true);
  if (solver.info() != Eigen::Success) throw Error("nonsymmetric eigensolver failed on the linearization");
  const Eigen::VectorXcd values = solver.eigenvalues();
  std::vector<std::complex<double>> list(values.data(), values.data() + values.size());
  StabilityReport report = classify_spectrum(list, threshold, imag_tol);

  // Locate the eigenvector belonging to the leading eigenvalue.
  Eigen::Index best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double gap = std::abs(values[i] - report.eigenvalues.front());
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  report.leading_eigenvector = solver.eigenvectors().col(best);
  return report;
}

}  // namespace bvam
