#include "lmstat/nulldist.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "lmstat/error.hpp"
#include "lmstat/rng.hpp"

namespace lmstat::nulldist {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

constexpr std::size_t kMaxPanels = 20'000'000;

struct Integrand {
  std::vector<double> w;  // nonzero weights
  double x;

  double theta(double u) const {
    double t = 0.0;
    for (double wi : w) t += std::atan(wi * u);
    return 0.5 * t - 0.5 * x * u;
  }
  double theta_prime(double u) const {
    double t = 0.0;
    for (double wi : w) t += wi / (1.0 + wi * wi * u * u);
    return 0.5 * t - 0.5 * x;
  }
  double log_rho(double u) const {
    double t = 0.0;
    for (double wi : w) t += std::log1p(wi * wi * u * u);
    return 0.25 * t;
  }
  double amplitude(double u) const { return std::exp(-log_rho(u)) / u; }
  double operator()(double u) const {
    if (u == 0.0) return theta_prime(0.0);
    return std::sin(theta(u)) * amplitude(u);
  }
};

}  // namespace

std::string_view to_string(Method m) noexcept {
  return m == Method::cf_inversion ? "cf-inversion" : "monte-carlo";
}

double imhof_cdf(std::span<const double> weights, double x, bool& converged, double tol) {
  converged = true;
  if (x <= 0.0) return 0.0;

  Integrand f;
  f.x = x;
  double wmax = 0.0, wsum = 0.0, log_prod = 0.0;
  for (double wi : weights) {
    if (wi < 0.0) throw DomainError("null-distribution weights must be nonnegative");
    if (wi > 0.0) {
      f.w.push_back(wi);
      wmax = std::max(wmax, wi);
      wsum += wi;
      log_prod += 0.5 * std::log(wi);
    }
  }
  if (f.w.empty()) return 1.0;  // point mass at zero, x > 0
  const double k = static_cast<double>(f.w.size());

  // Panels resolve both the oscillation of theta and the decay scale 1/wmax.
  const double width = std::min(kPi / std::max(wsum, x), 0.5 / wmax);

  double sum = 0.0;
  double u = 0.0;
  for (std::size_t panel = 0; panel < kMaxPanels; ++panel) {
    const double mid = u + 0.5 * width;
    double acc = 0.0;
    for (std::size_t g = 0; g < kGlNodes.size(); ++g) acc += kGlWeights[g] * f(mid + 0.5 * width * kGlNodes[g]);
    sum += 0.5 * width * acc;
    u += width;

    // Non-oscillatory bound: int_u^inf du / (u rho(u)) <= 2 / (k u^(k/2) prod sqrt(w)).
    if (k >= 3.0) {
      const double log_bound = std::log(2.0 / k) - 0.5 * k * std::log(u) - log_prod;
      if (log_bound < std::log(tol)) return std::clamp(0.5 - sum / kPi, 0.0, 1.0);
    }
    // Oscillatory tail once theta' ~ -x/2: int_u^inf A sin(theta) ~ A cos(theta) / theta'
    // with remainder of order (k/2 + 1) A / (u theta'^2).
    const double tp = f.theta_prime(u);
    if (tp < -0.25 * x) {
      const double a = f.amplitude(u);
      const double remainder = (0.5 * k + 1.0) * a / (u * tp * tp);
      if (remainder < tol) {
        sum += a * std::cos(f.theta(u)) / tp;
        return std::clamp(0.5 - sum / kPi, 0.0, 1.0);
      }
    }
  }
  converged = false;
  return std::clamp(0.5 - sum / kPi, 0.0, 1.0);
}

std::vector<double> monte_carlo_sample(std::span<const double> weights, std::size_t draws,
                                       std::uint64_t seed, unsigned threads) {
  std::vector<double> out(draws);
  const std::size_t batches = (draws + kBatchSize - 1) / kBatchSize;
  const std::vector<double> w(weights.begin(), weights.end());

  auto run_batch = [&](std::size_t b) {
    Engine eng = make_stream(seed, b);
    std::normal_distribution<double> normal;
    const std::size_t lo = b * kBatchSize;
    const std::size_t hi = std::min(draws, lo + kBatchSize);
    for (std::size_t i = lo; i < hi; ++i) {
      double v = 0.0;
      for (double wi : w) {
        const double z = normal(eng);
        v += wi * z * z;
      }
      out[i] = v;
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(batches, 1)));
  if (threads <= 1) {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < batches; b += threads) run_batch(b);
      });
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

NullDistribution::NullDistribution(kernel::EigenSpectrum spectrum, Method method,
                                   std::size_t mc_draws, std::uint64_t seed)
    : spectrum_(std::move(spectrum)), method_(method), mc_draws_(mc_draws), seed_(seed) {
  if (spectrum_.weights.empty()) throw DomainError("null distribution needs at least one weight");
  for (double w : spectrum_.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("null-distribution weights must be finite and nonnegative");
  }
  if (method_ == Method::monte_carlo) {
    if (mc_draws_ == 0) throw DomainError("monte-carlo method needs at least one draw");
    sample_ = std::make_shared<const std::vector<double>>(monte_carlo_sample(spectrum_.weights, mc_draws_, seed_));
  }
}

double NullDistribution::mean() const noexcept {
  return std::accumulate(spectrum_.weights.begin(), spectrum_.weights.end(), 0.0);
}

double NullDistribution::variance() const noexcept {
  double v = 0.0;
  for (double w : spectrum_.weights) v += 2.0 * w * w;
  return v;
}

std::span<const double> NullDistribution::sample() const noexcept {
  if (!sample_) return {};
  return *sample_;
}

namespace {

double empirical_cdf(std::span<const double> sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

}  // namespace

CdfValue null_cdf(const NullDistribution& dist, double x) {
  if (x <= 0.0) return {0.0, false};
  if (dist.method() == Method::monte_carlo) return {empirical_cdf(dist.sample(), x), false};
  bool ok = true;
  const double p = imhof_cdf(dist.spectrum().weights, x, ok);
  if (ok) return {p, false};
  const auto fallback = monte_carlo_sample(dist.spectrum().weights, dist.mc_draws(), dist.seed());
  return {empirical_cdf(fallback, x), true};
}

double critical_value(const NullDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");

  if (dist.method() == Method::monte_carlo) {
    const auto s = dist.sample();
    const auto rank = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(s.size())));
    return s[std::max<std::size_t>(rank, 1) - 1];
  }

  double lo = 0.0;
  double hi = dist.mean() + 20.0 * std::sqrt(dist.variance());
  if (null_cdf(dist, hi).probability < alpha) {
    throw ConvergenceError("quantile bracket [0, mean + 20 sd] does not contain alpha = " + std::to_string(alpha));
  }
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    if (null_cdf(dist, mid).probability < alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace lmstat::nulldist
