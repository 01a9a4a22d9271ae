#include "lmstat/cache.hpp"
#include "lmstat/error.hpp"
#include "lmstat/nulldist.hpp"

namespace lmstat::nulldist {

CriticalValues::CriticalValues(Options opts) : opts_(std::move(opts)) {}

kernel::EigenSpectrum CriticalValues::spectrum(int s) {
  if (s < 1) throw DomainError("number of frequencies s must be at least 1");
  std::lock_guard lock(mutex_);
  if (auto it = spectra_.find(s); it != spectra_.end()) return it->second;

  const cache::DiskCache disk(opts_.cache_dir);
  kernel::EigenSpectrum sp;
  if (auto hit = disk.load_kernel(kernel::KernelRegime::normalized_log, std::nullopt, s, opts_.resolution)) {
    sp = std::move(hit->spectrum);
  } else {
    kernel::QuadratureOptions q;
    q.resolution = opts_.resolution;
    const auto m = kernel::build_sigma(kernel::KernelRegime::normalized_log, 0.0, s, q);
    sp = kernel::eigen_spectrum(m);
    disk.store_kernel(m, sp);
  }
  spectra_.emplace(s, sp);
  return sp;
}

double CriticalValues::quantile(int s, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  {
    std::lock_guard lock(mutex_);
    if (auto it = quantiles_.find({s, alpha}); it != quantiles_.end()) return it->second;
  }
  const cache::DiskCache disk(opts_.cache_dir);
  double q = 0.0;
  if (auto hit = disk.load_quantile(s, alpha, opts_.resolution)) {
    q = *hit;
  } else {
    q = critical_value(NullDistribution(spectrum(s)), alpha);
    disk.store_quantile(s, alpha, opts_.resolution, q);
  }
  std::lock_guard lock(mutex_);
  quantiles_.emplace(std::pair{s, alpha}, q);
  return q;
}

CriticalValues& default_critical_values() {
  static CriticalValues instance(CriticalValues::Options{2048, cache::default_cache_dir()});
  return instance;
}

}  // namespace lmstat::nulldist
