#pragma once

#include "bvam/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace bvam {

using Complex = std::complex<double>;

/// Full-length DFT of a real field, entry m holding the mode with index
/// m for m < N/2 and m - N for m >= N/2 (FFT ordering).
using SpectralField = std::vector<Complex>;

namespace detail {
struct FftPlans;
}

/// Uniform periodic collocation grid on [-Lx, Lx) together with its FFT plans.
///
/// Conventions shared by every module:
///   x_j = -Lx + j*dx,  dx = 2 Lx / N,  j = 0..N-1   (x = 0 sits at j = N/2)
///   k_m = pi m / Lx                                   (k = 2 pi f, df = 1 / (2 Lx))
///   forward:  c_m = (1/N) sum_j u_j exp(-i k_m x_j)
///   inverse:  u_j = sum_m c_m exp(i k_m x_j)
/// The Laplacian symbol is -k_m^2. Copies share the immutable plans, and every
/// transform uses caller-owned buffers, so a grid may be used from many threads.
class SpectralGrid {
 public:
  SpectralGrid(int n, double half_length, bool dealias = false);

  int size() const { return n_; }
  int half_size() const { return n_ / 2 + 1; }
  double half_length() const { return half_length_; }
  double spacing() const { return dx_; }
  bool dealiased() const { return dealias_; }
  int center_index() const { return n_ / 2; }

  const Eigen::VectorXd& points() const { return points_; }
  /// k_m in FFT ordering, length N.
  const Eigen::VectorXd& wavenumbers() const { return wavenumbers_; }
  /// k_m^2 for the non-negative half spectrum m = 0..N/2.
  const Eigen::VectorXd& half_k2() const { return half_k2_; }
  /// 1 for retained modes, 0 for modes removed by the 2/3 rule (all ones without dealiasing).
  const Eigen::VectorXd& half_mask() const { return half_mask_; }

  // Raw unnormalized real<->half-complex transforms without the x_0 phase.
  // `in` is left untouched; buffers of any alignment are accepted.
  void raw_forward(const double* in, Complex* out) const;
  void raw_inverse(const Complex* in, double* out, Complex* scratch) const;

 private:
  int n_;
  double half_length_;
  double dx_;
  bool dealias_;
  Eigen::VectorXd points_;
  Eigen::VectorXd wavenumbers_;
  Eigen::VectorXd half_k2_;
  Eigen::VectorXd half_mask_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

SpectralField forward_transform(const SpectralGrid& grid, std::span<const double> u);

/// Throws SpectralError when the input is not conjugate symmetric to within 1e-10
/// (relative to its largest coefficient, floor 1).
Eigen::VectorXd inverse_transform(const SpectralGrid& grid, const SpectralField& f);

SpectralField spectral_laplacian(const SpectralGrid& grid, const SpectralField& f);

struct FourierRhs {
  SpectralField species1;
  SpectralField species2;
};

/// -k^2 mu_hat_i + R_hat_i, with mu and R evaluated pointwise in real space.
/// Throws DivergenceError on non-finite input.
FourierRhs rhs_fourier(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state);

/// Scratch buffers for the real-space right-hand side; one per thread.
struct RhsWorkspace {
  explicit RhsWorkspace(const SpectralGrid& grid);
  Eigen::VectorXd mu;
  Eigen::VectorXd react;
  Eigen::VectorXd lap;
  std::vector<Complex> spec;
  std::vector<Complex> scratch;
};

/// du/dt in real space for the stacked state y = [u1; u2], written to `out`.
/// Equals the inverse transform of rhs_fourier.
void rhs_real(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y,
              Eigen::VectorXd& out, RhsWorkspace& work);
Eigen::VectorXd rhs_real(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y);

struct AmplitudeSpectrum {
  Eigen::VectorXd frequency;
  Eigen::VectorXd amplitude;
};

/// 2/N |DFT(s - mean)| over the non-negative frequencies m / (N spacing), m = 0..N/2.
/// A sampled A cos(2 pi f0 t) on whole periods yields a single peak of height A at f0.
AmplitudeSpectrum amplitude_spectrum(std::span<const double> signal, double spacing);

/// du/dx by multiplication with i k_m (Nyquist mode dropped).
Eigen::VectorXd spectral_derivative(const SpectralGrid& grid, const Eigen::VectorXd& u);

/// Sum of |c_m|^2 over |m| > cutoff; cutoff must lie in [0, N/2].
double truncation_error_estimate(const SpectralGrid& grid, const SpectralField& f, int cutoff);

/// Total power sum |c_m|^2.
double spectral_power(const SpectralField& f);

/// Trigonometric interpolation of a periodic field onto a grid of `new_size` points
/// on the same domain (zero padding or truncation; a shared Nyquist mode is split evenly).
Eigen::VectorXd resample(const Eigen::VectorXd& u, int new_size);
FieldPair resample(const FieldPair& state, int new_size);

}  // namespace bvam
