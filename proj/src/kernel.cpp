#include "lmstat/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lmstat/error.hpp"

namespace lmstat::kernel {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Memory parameter and delta(d)

bool is_half(double d) { return d == 0.5; }

double beta_extended(double a, double b) {
  // B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b), valid for a in (-1, 0) too.
  return std::tgamma(a) * std::tgamma(b) / std::tgamma(a + b);
}

// ---------------------------------------------------------------------------
// Product quadrature on the unit square.
//
// The square is cut into N x N cells. A smooth factor f(x) g(y) is sampled at
// cell midpoints while the kernel k(x - y) is integrated exactly over each
// cell pair. The exact cell-pair integral depends only on the index offset
// and equals the second difference of the kernel's second antiderivative F2:
//
//   W_k = F2((k+1)h) - 2 F2(kh) + F2((k-1)h),   F2'' = k, F2(0) = 0, F2 even.

struct KernelShape {
  bool log = false;
  double exponent = 0.0;  // |t|^exponent when !log
};

// Second difference of g(k) = k^2 (-log k / 2 + 3/4) (log kernel, unit spacing).
long double log_second_difference(long double k) {
  auto g = [](long double t) -> long double {
    t = std::fabs(t);
    if (t == 0.0L) return 0.0L;
    return t * t * (-0.5L * std::log(t) + 0.75L);
  };
  return g(k + 1) - 2.0L * g(k) + g(k - 1);
}

long double power_second_difference(long double k, long double gamma) {
  auto g = [gamma](long double t) -> long double {
    t = std::fabs(t);
    if (t == 0.0L) return 0.0L;
    return std::pow(t, gamma + 2.0L);
  };
  return (g(k + 1) - 2.0L * g(k) + g(k - 1)) / ((gamma + 1.0L) * (gamma + 2.0L));
}

std::vector<double> cell_weights(KernelShape shape, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const long double h = 1.0L / n;
  if (shape.log) {
    const long double base = -std::log(h);
    for (int k = 0; k < n; ++k) {
      w[static_cast<std::size_t>(k)] =
          static_cast<double>(h * h * (base + log_second_difference(k)));
    }
  } else {
    const long double gamma = shape.exponent;
    const long double scale = std::pow(h, gamma + 2.0L);
    for (int k = 0; k < n; ++k) {
      w[static_cast<std::size_t>(k)] =
          static_cast<double>(scale * power_second_difference(k, gamma));
    }
  }
  return w;
}

enum class Trig { cos, sin };

std::vector<double> trig_samples(Trig trig, int freq, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    const double arg = 2.0 * kPi * freq * (p + 0.5) / n;
    v[static_cast<std::size_t>(p)] = trig == Trig::cos ? std::cos(arg) : std::sin(arg);
  }
  return v;
}

// out[p] = sum_q w[|p - q|] g[q]
std::vector<double> toeplitz_apply(const std::vector<double>& w, const std::vector<double>& g) {
  const std::size_t n = g.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    double acc = 0.0;
    for (std::size_t q = 0; q < p; ++q) acc += w[p - q] * g[q];
    for (std::size_t q = p; q < n; ++q) acc += w[q - p] * g[q];
    out[p] = acc;
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Midpoint sums M_ij for i, j = 1..s at one resolution.
Matrix midpoint_block(KernelShape shape, Trig trig, int s, int n) {
  const auto w = cell_weights(shape, n);
  std::vector<std::vector<double>> samples;
  samples.reserve(static_cast<std::size_t>(s));
  for (int i = 1; i <= s; ++i) samples.push_back(trig_samples(trig, i, n));
  Matrix m(static_cast<std::size_t>(s));
  for (int j = 0; j < s; ++j) {
    const auto c = toeplitz_apply(w, samples[static_cast<std::size_t>(j)]);
    for (int i = 0; i < s; ++i) {
      m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          dot(samples[static_cast<std::size_t>(i)], c);
    }
  }
  return m;
}

double midpoint_pair(KernelShape shape, Trig trig, int i, int j, int n) {
  const auto w = cell_weights(shape, n);
  const auto f = trig_samples(trig, i, n);
  const auto g = trig_samples(trig, j, n);
  return dot(f, toeplitz_apply(w, g));
}

// Two Richardson steps removing the h^2 and h^4 error terms of the midpoint
// sums at spacings h, 2h and 4h.
double extrapolate(double m1, double m2, double m4) {
  const double e1 = (4.0 * m1 - m2) / 3.0;
  const double e2 = (4.0 * m2 - m4) / 3.0;
  return (16.0 * e1 - e2) / 15.0;
}

Matrix extrapolate(const Matrix& m1, const Matrix& m2, const Matrix& m4) {
  Matrix out(m1.size());
  for (std::size_t i = 0; i < m1.size(); ++i)
    for (std::size_t j = 0; j < m1.size(); ++j) out(i, j) = extrapolate(m1(i, j), m2(i, j), m4(i, j));
  return out;
}

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

void check_resolution(int resolution) {
  if (resolution < 64 || resolution % 8 != 0) {
    throw DomainError("quadrature resolution must be a multiple of 8 and at least 64, got " +
                      std::to_string(resolution));
  }
}

void check_index(int i, int j) {
  if (i < 1 || j < 1) throw DomainError("kernel indices are 1-based and must be positive");
}

KernelShape shape_for(KernelRegime regime, double d) {
  switch (regime) {
    case KernelRegime::boundary_log:
    case KernelRegime::normalized_log:
      return {true, 0.0};
    case KernelRegime::integrated:
      return {false, 2.0 * d - 1.0};
    case KernelRegime::stationary:
      return {false, 2.0 * d + 1.0};
  }
  return {true, 0.0};
}

void check_regime_d(KernelRegime regime, double d) {
  switch (regime) {
    case KernelRegime::normalized_log:
      return;
    case KernelRegime::boundary_log:
      if (!is_half(d)) throw DomainError("boundary-log regime requires d = 1/2");
      return;
    case KernelRegime::integrated:
      if (!(d > 0.5 && d < 1.5)) throw DomainError("integrated regime requires 1/2 < d < 3/2");
      return;
    case KernelRegime::stationary:
      if (!(d > -0.5 && d < 0.5)) throw DomainError("stationary regime requires -1/2 < d < 1/2");
      return;
  }
}

double delta_of(double d, const QuadratureOptions& opts) {
  return delta_constant(d, opts.sigma_eps2, opts.coefficient(d)).value;
}

// Combines raw double integrals into a covariance entry for one regime.
struct EntryAssembler {
  KernelRegime regime;
  Block block;
  double d;
  double prefactor = 1.0;  // multiplies the double integral
  double delta = 0.0;      // stationary only

  EntryAssembler(KernelRegime r, Block b, double dd, const QuadratureOptions& opts)
      : regime(r), block(b), d(dd) {
    switch (regime) {
      case KernelRegime::normalized_log:
        prefactor = 1.0;
        break;
      case KernelRegime::boundary_log:
        prefactor = 0.5 * delta_of(-0.5, opts);
        break;
      case KernelRegime::integrated:
        prefactor = -0.5 * delta_of(d - 1.0, opts);
        break;
      case KernelRegime::stationary:
        delta = delta_of(d, opts);
        break;
    }
  }

  // Which trig function the double integral runs over.
  Trig integrand_trig() const {
    if (regime == KernelRegime::stationary) return block == Block::cos ? Trig::sin : Trig::cos;
    return block == Block::cos ? Trig::cos : Trig::sin;
  }

  double operator()(int i, int j, double integral, double a_ij) const {
    if (regime != KernelRegime::stationary) return prefactor * integral;
    const double cross = 2.0 * kPi * kPi * i * j * integral;
    if (block == Block::cos) return -delta * (a_ij + cross);
    return -delta * cross;
  }
};

[[noreturn]] void throw_nonconvergence(KernelRegime regime, Block block, int i, int j, double d,
                                       int resolution, double fine, double coarse) {
  std::ostringstream msg;
  msg << "kernel quadrature did not converge: regime=" << to_string(regime)
      << " block=" << (block == Block::cos ? "cos" : "sin") << " (i,j)=(" << i << "," << j
      << ") d=" << d << " resolution=" << resolution << " values " << fine << " vs " << coarse;
  throw ConvergenceError(msg.str());
}

bool converged(double fine, double coarse, const QuadratureOptions& opts) {
  return std::fabs(fine - coarse) <= opts.rel_tol * std::fabs(fine) + opts.abs_tol;
}

}  // namespace

// ---------------------------------------------------------------------------

MemoryParam::MemoryParam(double d) : d_(d) {
  if (!(d > -0.5 && d < 1.5)) {
    throw DomainError("memory parameter must lie in (-1/2, 3/2), got " + std::to_string(d));
  }
}

Regime MemoryParam::regime() const noexcept {
  if (d_ < 0.5) return Regime::stationary;
  if (d_ == 0.5) return Regime::boundary;
  return Regime::integrated;
}

DeltaConstant delta_constant(double d, double sigma_eps2, double coefficient) {
  if (!(d >= -0.5 && d < 0.5)) {
    throw DomainError("delta(d) is defined for d in [-1/2, 1/2), got " + std::to_string(d));
  }
  if (!(sigma_eps2 > 0.0)) throw DomainError("innovation variance must be positive");
  if (coefficient == 0.0 || !std::isfinite(coefficient)) {
    throw DegenerateSeries(d == 0.0 ? "sum of MA coefficients must be nonzero"
                                    : "coefficient c(d) must be nonzero and finite");
  }
  DeltaConstant out;
  out.d = d;
  out.sigma_eps2 = sigma_eps2;
  out.coefficient = coefficient;
  if (d == -0.5) {
    out.value = 8.0 * sigma_eps2 * coefficient * coefficient;
  } else if (d == 0.0) {
    out.value = sigma_eps2 * coefficient * coefficient;
  } else {
    const double c_big = sigma_eps2 * coefficient * coefficient * beta_extended(d, 1.0 - 2.0 * d);
    out.long_run_constant = c_big;
    out.value = c_big / (d * (2.0 * d + 1.0));
  }
  return out;
}

double farima_coefficient(double d) {
  if (d == 0.0) return 1.0;
  return 1.0 / std::tgamma(d);
}

std::string_view to_string(KernelRegime r) noexcept {
  switch (r) {
    case KernelRegime::boundary_log:
      return "boundary-log";
    case KernelRegime::integrated:
      return "integrated";
    case KernelRegime::stationary:
      return "stationary";
    case KernelRegime::normalized_log:
      return "normalized-log";
  }
  return "unknown";
}

KernelRegime parse_kernel_regime(std::string_view name) {
  if (name == "boundary-log") return KernelRegime::boundary_log;
  if (name == "integrated") return KernelRegime::integrated;
  if (name == "stationary") return KernelRegime::stationary;
  if (name == "normalized-log") return KernelRegime::normalized_log;
  throw ValidationError("unknown kernel regime '" + std::string(name) + "'");
}

KernelRegime regime_for(MemoryParam d) noexcept {
  switch (d.regime()) {
    case Regime::stationary:
      return KernelRegime::stationary;
    case Regime::boundary:
      return KernelRegime::boundary_log;
    case Regime::integrated:
      return KernelRegime::integrated;
  }
  return KernelRegime::stationary;
}

double power_cosine_integral(int k, double d, int panels) {
  // x = u^p with p (2d + 1) = 2 turns x^(2d) dx into p u du.
  const double p = 2.0 / (2.0 * d + 1.0);
  const double width = 1.0 / panels;
  double total = 0.0;
  for (int m = 0; m < panels; ++m) {
    const double mid = (m + 0.5) * width;
    double panel = 0.0;
    for (std::size_t g = 0; g < kGlNodes.size(); ++g) {
      const double u = mid + 0.5 * width * kGlNodes[g];
      panel += kGlWeights[g] * p * u * std::cos(2.0 * kPi * k * std::pow(u, p));
    }
    total += 0.5 * width * panel;
  }
  return total;
}

double a_coefficient(int i, int j, double d, const QuadratureOptions& opts) {
  check_index(i, j);
  if (!(d > -0.5 && d < 0.5)) throw DomainError("a_ij(d) requires -1/2 < d < 1/2");
  const int panels = opts.resolution;
  auto eval = [&](int n) {
    return 1.0 - (2.0 * d + 1.0) * (power_cosine_integral(i, d, n) + power_cosine_integral(j, d, n));
  };
  const double fine = eval(panels);
  if (opts.check_convergence) {
    const double coarse = eval(panels / 2);
    if (!converged(fine, coarse, opts)) {
      throw_nonconvergence(KernelRegime::stationary, Block::cos, i, j, d, panels, fine, coarse);
    }
  }
  return fine;
}

double kernel_entry(KernelRegime regime, Block block, int i, int j, double d,
                    const QuadratureOptions& opts) {
  check_index(i, j);
  check_resolution(opts.resolution);
  check_regime_d(regime, d);
  if (regime == KernelRegime::stationary && d == 0.0) return i == j ? 0.5 : 0.0;

  const KernelShape shape = shape_for(regime, d);
  const EntryAssembler assemble(regime, block, d, opts);
  const Trig trig = assemble.integrand_trig();
  const int r = opts.resolution;

  const double m1 = midpoint_pair(shape, trig, i, j, r);
  const double m2 = midpoint_pair(shape, trig, i, j, r / 2);
  const double m4 = midpoint_pair(shape, trig, i, j, r / 4);
  const bool stationary_cos = regime == KernelRegime::stationary && block == Block::cos;

  QuadratureOptions unchecked = opts;
  unchecked.check_convergence = false;
  const double a_fine = stationary_cos ? a_coefficient(i, j, d, unchecked) : 0.0;
  const double fine = assemble(i, j, extrapolate(m1, m2, m4), a_fine);

  if (opts.check_convergence) {
    const double m8 = midpoint_pair(shape, trig, i, j, r / 8);
    unchecked.resolution = r / 2;
    const double a_coarse = stationary_cos ? a_coefficient(i, j, d, unchecked) : 0.0;
    const double coarse = assemble(i, j, extrapolate(m2, m4, m8), a_coarse);
    if (!converged(fine, coarse, opts)) throw_nonconvergence(regime, block, i, j, d, r, fine, coarse);
  }
  return fine;
}

KernelMatrix build_sigma(KernelRegime regime, double d, int s, const QuadratureOptions& opts) {
  if (s < 1) throw DomainError("number of frequencies s must be at least 1");
  check_resolution(opts.resolution);
  check_regime_d(regime, d);

  KernelMatrix out;
  out.regime = regime;
  if (regime != KernelRegime::normalized_log) out.d = d;
  out.s = s;
  out.resolution = opts.resolution;

  // Flat spectrum: the normalized DFT is exactly white.
  if (regime == KernelRegime::stationary && d == 0.0) {
    out.cos_block = Matrix(static_cast<std::size_t>(s));
    out.sin_block = Matrix(static_cast<std::size_t>(s));
    for (std::size_t k = 0; k < static_cast<std::size_t>(s); ++k) {
      out.cos_block(k, k) = 0.5;
      out.sin_block(k, k) = 0.5;
    }
    return out;
  }

  const KernelShape shape = shape_for(regime, d);
  const int r = opts.resolution;
  QuadratureOptions unchecked = opts;
  unchecked.check_convergence = false;
  QuadratureOptions coarse_opts = unchecked;
  coarse_opts.resolution = r / 2;

  for (Block block : {Block::cos, Block::sin}) {
    const EntryAssembler assemble(regime, block, d, opts);
    const Trig trig = assemble.integrand_trig();
    const bool stationary_cos = regime == KernelRegime::stationary && block == Block::cos;

    const Matrix m1 = midpoint_block(shape, trig, s, r);
    const Matrix m2 = midpoint_block(shape, trig, s, r / 2);
    const Matrix m4 = midpoint_block(shape, trig, s, r / 4);
    const Matrix fine_raw = extrapolate(m1, m2, m4);
    Matrix coarse_raw;
    if (opts.check_convergence) coarse_raw = extrapolate(m2, m4, midpoint_block(shape, trig, s, r / 8));

    // The 1-D integrals in a_ij only depend on one index at a time.
    std::vector<double> cos_int_fine, cos_int_coarse;
    if (stationary_cos) {
      for (int k = 1; k <= s; ++k) {
        cos_int_fine.push_back(power_cosine_integral(k, d, r));
        if (opts.check_convergence) cos_int_coarse.push_back(power_cosine_integral(k, d, r / 2));
      }
    }
    auto a_from = [&](const std::vector<double>& ints, int i, int j) {
      return 1.0 - (2.0 * d + 1.0) *
                       (ints[static_cast<std::size_t>(i - 1)] + ints[static_cast<std::size_t>(j - 1)]);
    };

    Matrix entries(static_cast<std::size_t>(s));
    for (int i = 1; i <= s; ++i) {
      for (int j = 1; j <= s; ++j) {
        const auto ui = static_cast<std::size_t>(i - 1);
        const auto uj = static_cast<std::size_t>(j - 1);
        const double a_fine = stationary_cos ? a_from(cos_int_fine, i, j) : 0.0;
        const double fine = assemble(i, j, fine_raw(ui, uj), a_fine);
        if (opts.check_convergence) {
          const double a_coarse = stationary_cos ? a_from(cos_int_coarse, i, j) : 0.0;
          const double coarse = assemble(i, j, coarse_raw(ui, uj), a_coarse);
          if (!converged(fine, coarse, opts)) throw_nonconvergence(regime, block, i, j, d, r, fine, coarse);
        }
        entries(ui, uj) = fine;
      }
    }
    Matrix sym(static_cast<std::size_t>(s));
    for (std::size_t i = 0; i < sym.size(); ++i)
      for (std::size_t j = 0; j < sym.size(); ++j) sym(i, j) = 0.5 * (entries(i, j) + entries(j, i));
    (block == Block::cos ? out.cos_block : out.sin_block) = std::move(sym);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi

EigenDecomposition symmetric_eigen(Matrix a, const JacobiOptions& opts) {
  const std::size_t n = a.size();
  Matrix v(n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double frobenius = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) frobenius += a(i, j) * a(i, j);
  frobenius = std::sqrt(frobenius);

  auto off_norm = [&] {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(off);
  };

  const double threshold = opts.tolerance * (frobenius > 0.0 ? frobenius : 1.0);
  bool done = off_norm() <= threshold;
  for (int sweep = 0; sweep < opts.max_sweeps && !done; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    done = off_norm() <= threshold;
  }
  if (!done) {
    throw ConvergenceError("Jacobi eigensolver did not converge within " +
                           std::to_string(opts.max_sweeps) + " sweeps");
  }
  EigenDecomposition out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  return out;
}

std::vector<double> symmetric_eigenvalues(Matrix a, const JacobiOptions& opts) {
  return symmetric_eigen(std::move(a), opts).values;
}

double min_eigenvalue(const Matrix& block) {
  const auto values = symmetric_eigenvalues(block);
  return *std::min_element(values.begin(), values.end());
}

EigenSpectrum eigen_spectrum(const KernelMatrix& m) {
  std::vector<double> eig = symmetric_eigenvalues(m.cos_block);
  const auto sin_eig = symmetric_eigenvalues(m.sin_block);
  eig.insert(eig.end(), sin_eig.begin(), sin_eig.end());
  std::sort(eig.begin(), eig.end(), std::greater<>());
  EigenSpectrum out;
  out.weights.reserve(eig.size() + 1);
  out.weights.push_back(1.0);
  out.weights.insert(out.weights.end(), eig.begin(), eig.end());
  return out;
}

}  // namespace lmstat::kernel
