#include "lmstat/robinson.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <fftw3.h>

#include "lmstat/error.hpp"

namespace lmstat::robinson {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // |sum_m x_m e^{-2 pi i j m / n}|^2 for j = 0..n-1.
  std::vector<double> squared_modulus(std::span<const double> x) {
    std::copy(x.begin(), x.end(), in_);
    fftw_execute(plan_);
    std::vector<double> out(n_);
    for (std::size_t j = 0; j <= n_ / 2; ++j) {
      const double v = out_[j][0] * out_[j][0] + out_[j][1] * out_[j][1];
      out[j] = v;
      if (j != 0) out[n_ - j] = v;
    }
    return out;
  }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

RealFft& fft_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> plans;
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace

std::vector<double> frac_diff_coefficients(double d, std::size_t count) {
  std::vector<double> pi(count);
  if (count == 0) return pi;
  pi[0] = 1.0;
  for (std::size_t k = 1; k < count; ++k) {
    pi[k] = pi[k - 1] * (static_cast<double>(k) - 1.0 - d) / static_cast<double>(k);
  }
  return pi;
}

std::vector<double> frac_diff(std::span<const double> x, double d) {
  if (!(d >= 0.0)) throw DomainError("fractional differencing order must be nonnegative");
  const std::size_t n = x.size();
  const auto pi = frac_diff_coefficients(d, n);
  std::vector<double> u(n);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= t; ++k) acc += pi[k] * x[t - k];
    u[t] = acc;
  }
  return u;
}

std::vector<ArFit> yule_walker_path(std::span<const double> demeaned, int qmax) {
  if (qmax < 0) throw DomainError("qmax must be nonnegative");
  const std::size_t n = demeaned.size();
  if (n <= static_cast<std::size_t>(qmax)) throw DomainError("series too short for the requested AR order");

  std::vector<double> acov(static_cast<std::size_t>(qmax) + 1);
  for (std::size_t h = 0; h < acov.size(); ++h) {
    double acc = 0.0;
    for (std::size_t t = h; t < n; ++t) acc += demeaned[t] * demeaned[t - h];
    acov[h] = acc / static_cast<double>(n);
  }
  if (!(acov[0] > 0.0)) throw ConvergenceError("Yule-Walker system is singular (zero variance)");

  const double nn = static_cast<double>(n);
  std::vector<ArFit> path;
  std::vector<double> phi;
  double v = acov[0];
  path.push_back({{}, v, nn * std::log(v)});
  for (int q = 1; q <= qmax; ++q) {
    double num = acov[static_cast<std::size_t>(q)];
    for (int k = 1; k < q; ++k) num -= phi[static_cast<std::size_t>(k - 1)] * acov[static_cast<std::size_t>(q - k)];
    const double kappa = num / v;
    if (!(std::fabs(kappa) < 1.0)) throw ConvergenceError("Yule-Walker Toeplitz system is not positive definite");
    std::vector<double> next(static_cast<std::size_t>(q));
    for (int k = 1; k < q; ++k) {
      next[static_cast<std::size_t>(k - 1)] =
          phi[static_cast<std::size_t>(k - 1)] - kappa * phi[static_cast<std::size_t>(q - k - 1)];
    }
    next[static_cast<std::size_t>(q - 1)] = kappa;
    phi = std::move(next);
    v *= 1.0 - kappa * kappa;
    if (!(v > 0.0)) throw ConvergenceError("Yule-Walker innovation variance is not positive");
    path.push_back({phi, v, nn * std::log(v) + 2.0 * q});
  }
  return path;
}

Prewhitened ar_prewhiten(std::span<const double> u, int qmax) {
  if (qmax < 0) throw DomainError("qmax must be nonnegative");
  const std::size_t n = u.size();
  if (n <= 10 * static_cast<std::size_t>(qmax) || n < 2) {
    throw DomainError("prewhitening needs n > 10 qmax observations");
  }
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  for (std::size_t t = 0; t < n; ++t) centred[t] = u[t] - mean;

  const auto path = yule_walker_path(centred, qmax);
  std::size_t best = 0;
  for (std::size_t q = 1; q < path.size(); ++q) {
    if (path[q].aic < path[best].aic) best = q;
  }

  Prewhitened out;
  out.order = static_cast<int>(best);
  out.coefficients = path[best].coefficients;
  out.residuals.reserve(n - best);
  for (std::size_t t = best; t < n; ++t) {
    double e = centred[t];
    for (std::size_t k = 1; k <= best; ++k) e -= out.coefficients[k - 1] * centred[t - k];
    out.residuals.push_back(e);
  }
  return out;
}

std::vector<double> full_periodogram(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  auto out = fft_for(n).squared_modulus(x);
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

double log_sine_weight(std::size_t j, std::size_t n) {
  return std::log(2.0 * std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)));
}

double a_tilde_constant(std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double w = log_sine_weight(j, n);
    acc += w * w;
  }
  return 2.0 * acc / static_cast<double>(n);
}

RobinsonStat robinson_statistic(std::span<const double> x, bool prewhiten, int qmax) {
  if (x.size() < kMinLength) {
    throw DomainError("Robinson statistic needs at least " + std::to_string(kMinLength) + " observations");
  }
  std::vector<double> u = frac_diff(x, 0.5);
  RobinsonStat out;
  out.prewhitened = prewhiten;
  if (prewhiten) {
    auto pw = ar_prewhiten(u, qmax);
    u = std::move(pw.residuals);
    out.ar_order = pw.order;
  }
  const std::size_t n = u.size();
  out.n = n;

  double ss = 0.0;
  for (double v : u) ss += v * v;
  out.sigma2_tilde = ss / static_cast<double>(n);
  if (!(out.sigma2_tilde > 0.0)) throw DegenerateSeries("fractionally differenced series is identically zero");

  const auto pg = full_periodogram(u);
  double a = 0.0, big_a = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double w = log_sine_weight(j, n);
    a += w * pg[j];
    big_a += w * w;
  }
  out.a_tilde = -a / static_cast<double>(n);
  out.A_tilde = 2.0 * big_a / static_cast<double>(n);
  out.r_tilde = std::sqrt(static_cast<double>(n)) * out.a_tilde / (out.sigma2_tilde * std::sqrt(out.A_tilde));
  return out;
}

RobinsonOutcome robinson_test(std::span<const double> x, double alpha, bool prewhiten, int qmax) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  RobinsonOutcome out;
  out.stat = robinson_statistic(x, prewhiten, qmax);
  out.alpha = alpha;
  out.critical = boost::math::quantile(boost::math::normal_distribution<double>(), alpha);
  out.reject_nonstationarity = out.stat.r_tilde < out.critical;
  return out;
}

}  // namespace lmstat::robinson
