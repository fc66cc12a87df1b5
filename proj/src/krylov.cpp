#include "bvam/krylov.hpp"

#include "bvam/errors.hpp"

#include <cmath>
#include <limits>

namespace bvam {

GmresResult gmres(const LinearOperator& apply, const Eigen::VectorXd& rhs, double rel_tol, int restart,
                  int max_iterations) {
  const Eigen::Index n = rhs.size();
  GmresResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    out.relative_residual = 0.0;
    out.converged = true;
    return out;
  }
  const int m = std::max(1, restart);
  Eigen::VectorXd r = rhs;
  double beta = bnorm;

  while (out.iterations < max_iterations) {
    Eigen::MatrixXd basis(n, m + 1);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    basis.col(0) = r / beta;
    g[0] = beta;

    int k = 0;
    for (; k < m && out.iterations < max_iterations; ++k) {
      ++out.iterations;
      Eigen::VectorXd w = apply(basis.col(k));
      // Modified Gram-Schmidt with one reorthogonalization pass.
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= k; ++i) {
          const double h = basis.col(i).dot(w);
          hess(i, k) += h;
          w -= h * basis.col(i);
        }
      }
      hess(k + 1, k) = w.norm();
      const bool breakdown = hess(k + 1, k) <= 1e-14 * bnorm;
      if (!breakdown) basis.col(k + 1) = w / hess(k + 1, k);

      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
        hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
        hess(i, k) = t;
      }
      const double rho = std::hypot(hess(k, k), hess(k + 1, k));
      cs[k] = rho == 0.0 ? 1.0 : hess(k, k) / rho;
      sn[k] = rho == 0.0 ? 0.0 : hess(k + 1, k) / rho;
      hess(k, k) = rho;
      hess(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      out.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (out.relative_residual <= rel_tol || breakdown) {
        ++k;
        break;
      }
    }

    // Back substitution on the k x k triangular system.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= hess(i, j) * y[j];
      y[i] = hess(i, i) != 0.0 ? s / hess(i, i) : 0.0;
    }
    out.x += basis.leftCols(k) * y;

    if (out.relative_residual <= rel_tol) {
      out.converged = true;
      return out;
    }
    r = rhs - apply(out.x);
    beta = r.norm();
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= rel_tol) {
      out.converged = true;
      return out;
    }
    if (beta == 0.0) break;
  }
  return out;
}

std::string_view to_string(NewtonStatus status) {
  switch (status) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iterations: return "max_iterations";
    case NewtonStatus::line_search_failed: return "line_search_failed";
    case NewtonStatus::diverged: return "diverged";
  }
  return "unknown";
}

Eigen::VectorXd jacobian_vector_product(const ResidualFunction& f, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& fx, const Eigen::VectorXd& v) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) return Eigen::VectorXd::Zero(fx.size());
  const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + x.norm()) / vnorm;
  return (f(x + h * v) - fx) / h;
}

NewtonKrylovResult newton_krylov(const ResidualFunction& f, Eigen::VectorXd x0, const NewtonKrylovOptions& opts) {
  NewtonKrylovResult out;
  out.x = std::move(x0);
  Eigen::VectorXd fx;
  try {
    fx = f(out.x);
  } catch (const DivergenceError&) {
    out.status = NewtonStatus::diverged;
    out.residual_norm = std::numeric_limits<double>::infinity();
    return out;
  }
  out.residual_norm = fx.norm();
  out.history.push_back(out.residual_norm);

  while (true) {
    if (out.residual_norm <= opts.tol) {
      out.status = NewtonStatus::converged;
      return out;
    }
    if (out.iterations >= opts.max_iterations) {
      out.status = NewtonStatus::max_iterations;
      return out;
    }
    const Eigen::VectorXd x = out.x;
    const Eigen::VectorXd base = fx;
    const bool precondition = static_cast<bool>(opts.preconditioner);
    auto jv = [&](const Eigen::VectorXd& v) {
      return jacobian_vector_product(f, x, base, precondition ? opts.preconditioner(v) : v);
    };
    GmresResult lin;
    try {
      lin = gmres(jv, -base, opts.gmres_tol, opts.gmres_restart, opts.gmres_max_iterations);
      if (precondition) lin.x = opts.preconditioner(lin.x);
    } catch (const DivergenceError&) {
      out.status = NewtonStatus::diverged;
      return out;
    }
    out.linear_iterations += lin.iterations;

    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, lambda *= 0.5) {
      const Eigen::VectorXd trial = x + lambda * lin.x;
      Eigen::VectorXd ft;
      try {
        ft = f(trial);
      } catch (const DivergenceError&) {
        continue;
      }
      const double norm = ft.norm();
      if (std::isfinite(norm) && norm < out.residual_norm) {
        out.x = trial;
        fx = std::move(ft);
        out.residual_norm = norm;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      out.status = NewtonStatus::line_search_failed;
      return out;
    }
    out.history.push_back(out.residual_norm);
  }
}

}  // namespace bvam
