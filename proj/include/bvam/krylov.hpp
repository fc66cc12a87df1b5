#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string_view>
#include <vector>

namespace bvam {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 1.0;
  bool converged = false;
};

/// Restarted GMRES(m) from a zero initial guess, stopping at ||b - A x|| <= rel_tol ||b||.
GmresResult gmres(const LinearOperator& apply, const Eigen::VectorXd& rhs, double rel_tol, int restart,
                  int max_iterations);

struct NewtonKrylovOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  int gmres_restart = 50;
  double gmres_tol = 1e-3;
  int gmres_max_iterations = 200;
  int max_halvings = 8;
  /// Optional right preconditioner v -> M^-1 v; GMRES then works on J M^-1.
  LinearOperator preconditioner{};
};

enum class NewtonStatus { converged, max_iterations, line_search_failed, diverged };

std::string_view to_string(NewtonStatus status);

struct NewtonKrylovResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  int linear_iterations = 0;
  NewtonStatus status = NewtonStatus::max_iterations;
  std::vector<double> history;

  bool converged() const { return status == NewtonStatus::converged; }
};

/// Directional finite difference (F(x + h v) - F(x)) / h with
/// h = sqrt(eps) (1 + ||x||) / ||v||.
Eigen::VectorXd jacobian_vector_product(const ResidualFunction& f, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& fx, const Eigen::VectorXd& v);

/// Jacobian-free Newton-Krylov with step halving on residual increase.
///
/// Residual evaluations that throw bvam::DivergenceError during the line search
/// count as an increase. Returns the best iterate; never throws on non-convergence.
NewtonKrylovResult newton_krylov(const ResidualFunction& f, Eigen::VectorXd x0, const NewtonKrylovOptions& opts);

}  // namespace bvam
