#pragma once

// Robinson's r-tilde test of d = 1/2 against d < 1/2 for fractionally
// integrated models, used as the comparison baseline.

#include <cstddef>
#include <span>
#include <vector>

namespace lmstat::robinson {

/// Coefficients pi_0..pi_{count-1} of (1 - B)^d: pi_0 = 1, pi_k = pi_{k-1} (k - 1 - d) / k.
std::vector<double> frac_diff_coefficients(double d, std::size_t count);

/// U_t = sum_{k=0}^{t-1} pi_k X_{t-k}, using only in-sample past values.
/// Throws DomainError for d < 0.
std::vector<double> frac_diff(std::span<const double> x, double d);

/// Yule-Walker AR(q) fit on a (demeaned) series.
struct ArFit {
  std::vector<double> coefficients;  // phi_1..phi_q
  double innovation_variance = 0.0;
  double aic = 0.0;  // n log(sigma^2) + 2q
};

/// Fits orders 0..qmax at once via Levinson-Durbin on the biased sample
/// autocovariances. Throws ConvergenceError when the Toeplitz system is not
/// positive definite.
std::vector<ArFit> yule_walker_path(std::span<const double> demeaned, int qmax);

struct Prewhitened {
  std::vector<double> residuals;
  int order = 0;
  std::vector<double> coefficients;
};

/// Demeans u, selects q in 0..qmax by AIC and returns the AR residuals
/// (first q values dropped). Requires n > 10 qmax.
Prewhitened ar_prewhiten(std::span<const double> u, int qmax);

/// I(lambda_j), j = 0..n-1, with the (1/n)|sum x_k e^{i k lambda_j}|^2 normalization.
std::vector<double> full_periodogram(std::span<const double> x);

/// log(2 sin(pi j / n)).
double log_sine_weight(std::size_t j, std::size_t n);

/// A-tilde = (2/n) sum_{j=1}^{n-1} log(2 sin(pi j / n))^2.
double a_tilde_constant(std::size_t n);

struct RobinsonStat {
  double a_tilde = 0.0;
  double sigma2_tilde = 0.0;
  double A_tilde = 0.0;
  double r_tilde = 0.0;
  bool prewhitened = false;
  int ar_order = 0;
  /// Length of the series the periodogram was computed from.
  std::size_t n = 0;
};

inline constexpr int kDefaultQmax = 3;
inline constexpr std::size_t kMinLength = 64;

/// r-tilde = sqrt(n) a-tilde / (sigma2-tilde sqrt(A-tilde)) from U = (1 - B)^{1/2} X,
/// optionally replaced by AR residuals. Sums run over j = 1..n-1.
RobinsonStat robinson_statistic(std::span<const double> x, bool prewhiten = false, int qmax = kDefaultQmax);

struct RobinsonOutcome {
  RobinsonStat stat;
  double alpha = 0.05;
  /// Standard normal alpha-quantile.
  double critical = 0.0;
  /// r-tilde < critical.
  bool reject_nonstationarity = false;
};

RobinsonOutcome robinson_test(std::span<const double> x, double alpha, bool prewhiten = false,
                              int qmax = kDefaultQmax);

}  // namespace lmstat::robinson
