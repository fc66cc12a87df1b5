#include "bvam/spectral.hpp"

#include "bvam/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace bvam {

namespace detail {

// FFTW planning is not thread-safe; execution through the new-array interface is.
struct FftPlans {
  explicit FftPlans(int n) : n(n) {
    std::vector<double> real(n);
    std::vector<Complex> spec(n / 2 + 1);
    auto* c = reinterpret_cast<fftw_complex*>(spec.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_r2c_1d(n, real.data(), c, flags);
    inverse = fftw_plan_dft_c2r_1d(n, c, real.data(), flags);
  }
  ~FftPlans() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  int n;
  fftw_plan forward;
  fftw_plan inverse;
};

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::shared_ptr<const FftPlans> plans_for(int n) {
  std::lock_guard lock(planner_mutex());
  static std::map<int, std::shared_ptr<const FftPlans>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const FftPlans>(n);
  return slot;
}

void execute_forward(const FftPlans& plans, const double* in, Complex* out) {
  // r2c leaves its input intact for 1-D transforms.
  fftw_execute_dft_r2c(plans.forward, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void execute_inverse(const FftPlans& plans, const Complex* in, double* out, Complex* scratch) {
  std::copy(in, in + plans.n / 2 + 1, scratch);
  fftw_execute_dft_c2r(plans.inverse, reinterpret_cast<fftw_complex*>(scratch), out);
}

}  // namespace detail

namespace {

int signed_mode(int index, int n) { return index < n / 2 ? index : index - n; }

double parity(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

SpectralGrid::SpectralGrid(int n, double half_length, bool dealias)
    : n_(n), half_length_(half_length), dealias_(dealias) {
  if (n < 2 || n % 2 != 0) throw DimensionError("grid size must be a positive even integer, got " + std::to_string(n));
  if (!(half_length > 0.0)) throw DimensionError("domain half-length must be positive");
  dx_ = 2.0 * half_length / n;
  points_.resize(n);
  wavenumbers_.resize(n);
  const double k0 = std::numbers::pi / half_length;
  for (int j = 0; j < n; ++j) {
    points_[j] = -half_length + j * dx_;
    wavenumbers_[j] = k0 * signed_mode(j, n);
  }
  half_k2_.resize(n / 2 + 1);
  half_mask_.resize(n / 2 + 1);
  for (int m = 0; m <= n / 2; ++m) {
    half_k2_[m] = (k0 * m) * (k0 * m);
    half_mask_[m] = (!dealias || 3 * m <= n) ? 1.0 : 0.0;
  }
  plans_ = detail::plans_for(n);
}

void SpectralGrid::raw_forward(const double* in, Complex* out) const { detail::execute_forward(*plans_, in, out); }

void SpectralGrid::raw_inverse(const Complex* in, double* out, Complex* scratch) const {
  detail::execute_inverse(*plans_, in, out, scratch);
}

SpectralField forward_transform(const SpectralGrid& grid, std::span<const double> u) {
  const int n = grid.size();
  if (static_cast<int>(u.size()) != n) {
    throw DimensionError("field has " + std::to_string(u.size()) + " points, grid has " + std::to_string(n));
  }
  std::vector<Complex> half(grid.half_size());
  grid.raw_forward(u.data(), half.data());
  SpectralField out(n);
  const double inv_n = 1.0 / n;
  for (int m = 0; m <= n / 2; ++m) out[m] = half[m] * (parity(m) * inv_n);
  for (int m = 1; m < n / 2; ++m) out[n - m] = std::conj(out[m]);
  return out;
}

Eigen::VectorXd inverse_transform(const SpectralGrid& grid, const SpectralField& f) {
  const int n = grid.size();
  if (static_cast<int>(f.size()) != n) throw DimensionError("spectrum length does not match grid");
  double scale = 1.0;
  for (const auto& c : f) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw SpectralError("non-finite spectral coefficient");
    scale = std::max(scale, std::abs(c));
  }
  double asym = 0.0;
  for (int m = 0; m < n; ++m) asym = std::max(asym, std::abs(f[(n - m) % n] - std::conj(f[m])));
  if (asym > 1e-10 * scale) {
    throw SpectralError("spectrum is not conjugate symmetric (defect " + std::to_string(asym) +
                        "); inverse would have an imaginary part");
  }
  std::vector<Complex> half(grid.half_size()), scratch(grid.half_size());
  for (int m = 0; m <= n / 2; ++m) half[m] = f[m] * parity(m);
  Eigen::VectorXd u(n);
  grid.raw_inverse(half.data(), u.data(), scratch.data());
  return u;
}

SpectralField spectral_laplacian(const SpectralGrid& grid, const SpectralField& f) {
  if (static_cast<int>(f.size()) != grid.size()) throw DimensionError("spectrum length does not match grid");
  SpectralField out(f.size());
  const auto& k = grid.wavenumbers();
  for (std::size_t m = 0; m < f.size(); ++m) out[m] = -k[m] * k[m] * f[m];
  return out;
}

FourierRhs rhs_fourier(const ModelParameters& p, const SpectralGrid& grid, const FieldPair& state) {
  const int n = grid.size();
  state.check(n);
  if (!state.u1.allFinite() || !state.u2.allFinite()) throw DivergenceError("non-finite state in right-hand side", 0.0);
  Eigen::VectorXd mu1(n), mu2(n), r1(n), r2(n);
  for (int j = 0; j < n; ++j) {
    const auto m = chemical_potentials(p, state.u1[j], state.u2[j]);
    const auto r = reaction_terms(p, state.u1[j], state.u2[j]);
    mu1[j] = m.mu1;
    mu2[j] = m.mu2;
    r1[j] = r.r1;
    r2[j] = r.r2;
  }
  const auto& k = grid.wavenumbers();
  auto combine = [&](const Eigen::VectorXd& mu, const Eigen::VectorXd& react) {
    const auto mu_hat = forward_transform(grid, {mu.data(), static_cast<std::size_t>(n)});
    const auto r_hat = forward_transform(grid, {react.data(), static_cast<std::size_t>(n)});
    SpectralField out(n);
    for (int m = 0; m < n; ++m) {
      const double keep = (!grid.dealiased() || 3 * std::abs(signed_mode(m, n)) <= n) ? 1.0 : 0.0;
      out[m] = keep * (-k[m] * k[m] * mu_hat[m] + r_hat[m]);
    }
    return out;
  };
  return {combine(mu1, r1), combine(mu2, r2)};
}

RhsWorkspace::RhsWorkspace(const SpectralGrid& grid)
    : mu(2 * grid.size()), react(2 * grid.size()), lap(grid.size()), spec(grid.half_size()), scratch(grid.half_size()) {}

void rhs_real(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y, Eigen::VectorXd& out,
              RhsWorkspace& work) {
  const int n = grid.size();
  const int nh = grid.half_size();
  if (y.size() != 2 * n) throw DimensionError("stacked state does not match grid");
  out.resize(2 * n);
  const double* u1 = y.data();
  const double* u2 = y.data() + n;
  const auto& k2 = grid.half_k2();
  const auto& mask = grid.half_mask();
  const double inv_n = 1.0 / n;

  for (int j = 0; j < n; ++j) {
    const auto m = chemical_potentials(p, u1[j], u2[j]);
    const auto r = reaction_terms(p, u1[j], u2[j]);
    work.mu[j] = m.mu1;
    work.mu[n + j] = m.mu2;
    work.react[j] = r.r1;
    work.react[n + j] = r.r2;
  }
  for (int s = 0; s < 2; ++s) {
    double* react = work.react.data() + s * n;
    grid.raw_forward(work.mu.data() + s * n, work.spec.data());
    for (int m = 0; m < nh; ++m) work.spec[m] *= -k2[m] * mask[m] * inv_n;
    grid.raw_inverse(work.spec.data(), work.lap.data(), work.scratch.data());
    if (grid.dealiased()) {
      grid.raw_forward(react, work.spec.data());
      for (int m = 0; m < nh; ++m) work.spec[m] *= mask[m] * inv_n;
      grid.raw_inverse(work.spec.data(), react, work.scratch.data());
    }
    double* dst = out.data() + s * n;
    for (int j = 0; j < n; ++j) dst[j] = work.lap[j] + react[j];
  }
}

Eigen::VectorXd rhs_real(const ModelParameters& p, const SpectralGrid& grid, const Eigen::VectorXd& y) {
  RhsWorkspace work(grid);
  Eigen::VectorXd out;
  rhs_real(p, grid, y, out, work);
  return out;
}

AmplitudeSpectrum amplitude_spectrum(std::span<const double> signal, double spacing) {
  const int n = static_cast<int>(signal.size());
  if (n < 2) throw DimensionError("amplitude spectrum needs at least two samples");
  if (!(spacing > 0.0)) throw DimensionError("sample spacing must be positive");
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= n;
  std::vector<double> centered(n);
  for (int j = 0; j < n; ++j) centered[j] = signal[j] - mean;

  const int nh = n / 2 + 1;
  std::vector<Complex> spec(nh);
  const auto plans = detail::plans_for(n);
  detail::execute_forward(*plans, centered.data(), spec.data());

  AmplitudeSpectrum out{Eigen::VectorXd(nh), Eigen::VectorXd(nh)};
  const double df = 1.0 / (n * spacing);
  for (int m = 0; m < nh; ++m) {
    out.frequency[m] = m * df;
    out.amplitude[m] = 2.0 / n * std::abs(spec[m]);
  }
  return out;
}

Eigen::VectorXd spectral_derivative(const SpectralGrid& grid, const Eigen::VectorXd& u) {
  const int n = grid.size();
  if (u.size() != n) throw DimensionError("field does not match grid");
  const int nh = grid.half_size();
  std::vector<Complex> spec(nh), scratch(nh);
  grid.raw_forward(u.data(), spec.data());
  const double k0 = std::numbers::pi / grid.half_length();
  for (int m = 0; m < nh; ++m) spec[m] *= Complex(0.0, (2 * m == n) ? 0.0 : k0 * m / n);
  Eigen::VectorXd out(n);
  grid.raw_inverse(spec.data(), out.data(), scratch.data());
  return out;
}

double truncation_error_estimate(const SpectralGrid& grid, const SpectralField& f, int cutoff) {
  const int n = grid.size();
  if (static_cast<int>(f.size()) != n) throw DimensionError("spectrum length does not match grid");
  if (cutoff < 0 || cutoff > n / 2) {
    throw DimensionError("cutoff " + std::to_string(cutoff) + " outside [0, " + std::to_string(n / 2) + "]");
  }
  double tail = 0.0;
  for (int m = 0; m < n; ++m) {
    if (std::abs(signed_mode(m, n)) > cutoff) tail += std::norm(f[m]);
  }
  return tail;
}

double spectral_power(const SpectralField& f) {
  double total = 0.0;
  for (const auto& c : f) total += std::norm(c);
  return total;
}

Eigen::VectorXd resample(const Eigen::VectorXd& u, int new_size) {
  const int n = static_cast<int>(u.size());
  if (n < 2 || n % 2 != 0 || new_size < 2 || new_size % 2 != 0) {
    throw DimensionError("resampling requires even grid sizes");
  }
  if (new_size == n) return u;
  const auto src_plans = detail::plans_for(n);
  const auto dst_plans = detail::plans_for(new_size);
  std::vector<Complex> src(n / 2 + 1), dst(new_size / 2 + 1, Complex{}), scratch(new_size / 2 + 1);
  detail::execute_forward(*src_plans, u.data(), src.data());
  for (auto& c : src) c /= n;

  const int shared = std::min(n, new_size) / 2;
  for (int m = 0; m < shared; ++m) dst[m] = src[m];
  if (new_size > n) {
    dst[shared] = 0.5 * src[shared];  // old Nyquist cosine splits into +/- n/2
  } else {
    dst[shared] = Complex(2.0 * src[shared].real(), 0.0);  // folds +/- new_size/2 into the new Nyquist mode
  }
  Eigen::VectorXd out(new_size);
  detail::execute_inverse(*dst_plans, dst.data(), out.data(), scratch.data());
  return out;
}

FieldPair resample(const FieldPair& state, int new_size) {
  return {resample(state.u1, new_size), resample(state.u2, new_size)};
}

}  // namespace bvam
