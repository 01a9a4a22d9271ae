#pragma once

// Limiting covariance matrices of the normalized low-frequency DFT vector and
// their eigen-spectra.
//
// For a memory parameter d the 2s x 2s covariance is block diagonal: a cosine
// block and a sine block, each s x s. Entries are double integrals over the
// unit square of trigonometric products against a kernel in |x - y|:
//
//   boundary      d = 1/2     :  delta(-1/2)/2 * II trig trig (-log|x-y|)
//   integrated    1/2<d<3/2   : -delta(d-1)/2  * II trig trig |x-y|^(2d-1)
//   stationary   -1/2<d<1/2   : -delta(d) [a_ij(d) + 2 pi^2 ij II sin sin |x-y|^(2d+1)]  (cos)
//                               -delta(d) 2 pi^2 ij II cos cos |x-y|^(2d+1)              (sin)
//   normalized-log            :  II trig trig (-log|x-y|)
//
// The normalized-log matrix carries no prefactor; its eigenvalues are the
// weights of the null distribution of the test statistic.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmstat/matrix.hpp"

namespace lmstat::kernel {

enum class Regime { stationary, boundary, integrated };

/// Memory parameter d in (-1/2, 3/2).
class MemoryParam {
 public:
  explicit MemoryParam(double d);

  double value() const noexcept { return d_; }
  Regime regime() const noexcept;

 private:
  double d_;
};

/// The constant delta(d) governing Var(X_1 + ... + X_n).
struct DeltaConstant {
  double d = 0.0;
  double sigma_eps2 = 1.0;
  /// c(d) for d != 0, the sum of the MA coefficients for d = 0.
  double coefficient = 0.0;
  double value = 0.0;
  /// C(d) = sigma^2 c(d)^2 B(d, 1-2d), present only for 0 < |d| < 1/2.
  std::optional<double> long_run_constant;
};

/// delta(d) for d in [-1/2, 1/2):
///   d = -1/2        : 8 sigma^2 c(-1/2)^2
///   d = 0           : sigma^2 (sum a_i)^2        (coefficient = sum a_i)
///   0 < |d| < 1/2   : C(d) / (d (2d + 1))
/// Throws DomainError outside [-1/2, 1/2) and DegenerateSeries for a zero coefficient.
DeltaConstant delta_constant(double d, double sigma_eps2, double coefficient);

/// c(d) of FARIMA(0,d,0): 1/Gamma(d), and the MA coefficient sum 1 at d = 0.
double farima_coefficient(double d);

/// Maps d to c(d) (or to the MA coefficient sum at d = 0).
using CoefficientFn = std::function<double(double)>;

enum class KernelRegime { boundary_log, integrated, stationary, normalized_log };
enum class Block { cos, sin };

std::string_view to_string(KernelRegime r) noexcept;
KernelRegime parse_kernel_regime(std::string_view name);

/// The kernel regime appropriate for a memory parameter.
KernelRegime regime_for(MemoryParam d) noexcept;

struct QuadratureOptions {
  /// Midpoint cells per axis; must be a multiple of 8 and at least 64.
  int resolution = 2048;
  /// Tolerance on |E(R) - E(R/2)| <= rel_tol |E(R)| + abs_tol.
  double rel_tol = 1e-4;
  double abs_tol = 1e-9;
  /// Whether to run the two-resolution convergence check at all.
  bool check_convergence = true;
  double sigma_eps2 = 1.0;
  CoefficientFn coefficient = farima_coefficient;
};

/// a_ij(d) = 1 - (2d + 1) int_0^1 x^(2d) (cos(2 pi i x) + cos(2 pi j x)) dx.
double a_coefficient(int i, int j, double d, const QuadratureOptions& opts = {});

/// int_0^1 x^(2d) cos(2 pi k x) dx on a mesh graded toward x = 0.
double power_cosine_integral(int k, double d, int panels);

/// One entry of a covariance block, 1-based (i, j).
/// `d` is ignored for normalized_log and must equal 1/2 for boundary_log.
/// Throws ConvergenceError when successive resolutions disagree.
double kernel_entry(KernelRegime regime, Block block, int i, int j, double d,
                    const QuadratureOptions& opts = {});

struct KernelMatrix {
  KernelRegime regime = KernelRegime::normalized_log;
  /// Absent for normalized_log.
  std::optional<double> d;
  int s = 0;
  int resolution = 0;
  Matrix cos_block;
  Matrix sin_block;
};

/// Assembles both blocks and symmetrizes each by averaging (i,j) and (j,i).
/// Positive definiteness is not checked here.
KernelMatrix build_sigma(KernelRegime regime, double d, int s, const QuadratureOptions& opts = {});

/// Null-distribution weights: psi_0 = 1 followed by the 2s block eigenvalues
/// sorted descending.
struct EigenSpectrum {
  std::vector<double> weights;

  std::size_t frequencies() const noexcept { return (weights.size() - 1) / 2; }
};

EigenSpectrum eigen_spectrum(const KernelMatrix& m);

/// Smallest eigenvalue of a symmetric block.
double min_eigenvalue(const Matrix& block);

struct JacobiOptions {
  double tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations (unsorted).
/// Throws ConvergenceError if the off-diagonal norm does not fall below
/// tolerance * ||A||_F within max_sweeps.
std::vector<double> symmetric_eigenvalues(Matrix a, const JacobiOptions& opts = {});

/// Eigen-decomposition returning eigenvectors as columns of `vectors`.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;
};
EigenDecomposition symmetric_eigen(Matrix a, const JacobiOptions& opts = {});

}  // namespace lmstat::kernel
