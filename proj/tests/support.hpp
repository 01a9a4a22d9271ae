#pragma once

// Independent reference computations shared by the unit tests. Nothing here
// calls into the library.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

/// cos(2 pi k x) or sin(2 pi k x), written as cos(w x + phase).
struct Trig {
  int k = 1;
  bool is_sin = false;
  double omega() const { return 2.0 * kPi * k; }
  double phase() const { return is_sin ? -kPi / 2.0 : 0.0; }
};

/// int_0^L cos(c x + e) dx.
inline double cos_integral(double c, double e, double len) {
  if (std::abs(c) < 1e-300) return len * std::cos(e);
  return (std::sin(c * len + e) - std::sin(e)) / c;
}

/// H(t) = int_0^{1-t} [f(x) g(x+t) + f(x+t) g(x)] dx, so that
/// II f(x) g(y) k(|x-y|) dx dy = int_0^1 k(t) H(t) dt.
inline double overlap(Trig f, Trig g, double t) {
  const double a = f.omega(), b = g.omega(), p = f.phase(), q = g.phase();
  const double len = 1.0 - t;
  double h = 0.0;
  h += 0.5 * cos_integral(a - b, -b * t + p - q, len);
  h += 0.5 * cos_integral(a + b, b * t + p + q, len);
  h += 0.5 * cos_integral(a - b, a * t + p - q, len);
  h += 0.5 * cos_integral(a + b, a * t + p + q, len);
  return h;
}

/// II f(x) g(y) k(|x-y|) over the unit square by one-dimensional tanh-sinh.
inline double double_integral(Trig f, Trig g, const std::function<double(double)>& k) {
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  auto integrand = [&](double t) { return k(t) * overlap(f, g, t); };
  // Split so each piece carries a few oscillations at most.
  const int pieces = 4 * std::max(1, std::max(f.k, g.k));
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    total += integrator.integrate(integrand, static_cast<double>(i) / pieces, static_cast<double>(i + 1) / pieces);
  }
  return total;
}

inline double neg_log(double t) { return -std::log(t); }

/// delta(d) for FARIMA(0,d,0) with unit innovations, 0 < |d| < 1/2.
inline double farima_delta(double d) {
  const double c = 1.0 / std::tgamma(d);
  const double beta = std::tgamma(d) * std::tgamma(1.0 - 2.0 * d) / std::tgamma(1.0 - d);
  return c * c * beta / (d * (2.0 * d + 1.0));
}

/// 1 - (2d+1) int_0^1 x^(2d) (cos 2 pi i x + cos 2 pi j x) dx.
inline double a_ij(int i, int j, double d) {
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  auto piece = [&](int k) {
    double total = 0.0;
    const int pieces = 4 * k;
    for (int m = 0; m < pieces; ++m) {
      total += integrator.integrate([&](double x) { return std::pow(x, 2.0 * d) * std::cos(2.0 * kPi * k * x); },
                                    static_cast<double>(m) / pieces, static_cast<double>(m + 1) / pieces);
    }
    return total;
  };
  return 1.0 - (2.0 * d + 1.0) * (piece(i) + piece(j));
}

/// FARIMA(0,d,0) autocovariance from the closed Gamma-ratio form.
inline double farima_acf(double d, std::size_t h) {
  if (h == 0) return std::tgamma(1.0 - 2.0 * d) / std::pow(std::tgamma(1.0 - d), 2);
  const double hh = static_cast<double>(h);
  const double log_ratio = std::lgamma(hh + d) - std::lgamma(hh + 1.0 - d);
  const double front = std::tgamma(1.0 - 2.0 * d) / (std::tgamma(d) * std::tgamma(1.0 - d));
  if (d == 0.0) return 0.0;
  return front * std::exp(log_ratio);
}

/// (1/n) |sum_{k=1}^n x_k e^{i k lambda_j}|^2 by direct summation.
inline double periodogram(std::span<const double> x, std::size_t j) {
  const double n = static_cast<double>(x.size());
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += x[k] * std::polar(1.0, 2.0 * kPi * static_cast<double>(j) * static_cast<double>(k + 1) / n);
  }
  return std::norm(acc) / n;
}

inline std::vector<double> gaussian(std::size_t n, unsigned seed, double mean = 0.0, double sd = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> z(mean, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = z(gen);
  return x;
}

}  // namespace oracle
