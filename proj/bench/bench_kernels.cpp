// Serial vs OpenMP timings for the dense kernels (Laplacian, linearization, monodromy).
// Usage: bvam_bench [N] [repeats]

#include "bvam/continuation.hpp"
#include "bvam/equilibrium.hpp"
#include "bvam/orbit.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace bvam;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-16s %12.4f %12.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::stoi(argv[1]) : 64;
  const int repeats = argc > 2 ? std::stoi(argv[2]) : 3;
  std::printf("N = %d, %d OpenMP threads, best of %d\n", n, omp_get_max_threads(), repeats);
  std::printf("%-16s %12s %12s %9s\n", "kernel", "serial [s]", "openmp [s]", "speedup");

  auto regime = make_regime(Regime::linear, -1.0);
  const auto& p = regime.parameters;
  SpectralGrid grid(n, p.Lx);

  Eigen::MatrixXd a, b;
  const double ls = best_of(repeats, [&] { a = laplacian_matrix_serial(grid); });
  const double lp = best_of(repeats, [&] { b = laplacian_matrix(grid); });
  row("laplacian", ls, lp, a == b);

  const auto eq = newton_krylov_solve(p, grid, cosine_guess(grid, 0.5, 0.5, 3, 3));
  const double as = best_of(repeats, [&] { a = assemble_linearization_serial(p, grid, eq.state); });
  const double ap = best_of(repeats, [&] { b = assemble_linearization(p, grid, eq.state); });
  row("linearization", as, ap, a == b);

  // A short-period flow stands in for an orbit: the cost per column is what matters.
  PeriodicOrbit orbit;
  orbit.anchor = eq.state;
  orbit.period = 0.5;
  const double dt = 5e-4;
  MonodromyResult ms, mp;
  const double s = best_of(1, [&] { ms = monodromy_matrix_serial(p, grid, orbit, dt); });
  const double q = best_of(1, [&] { mp = monodromy_matrix(p, grid, orbit, dt); });
  row("monodromy", s, q, ms.matrix == mp.matrix);
  return 0;
}
