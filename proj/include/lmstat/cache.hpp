#pragma once

// On-disk cache for kernel matrices, spectra and null quantiles.
//
// One JSON file per key, written atomically (temp file + rename) so
// concurrent CLI runs never observe partial files. Unreadable or malformed
// entries are treated as misses.

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "lmstat/kernel.hpp"

namespace lmstat::cache {

/// Environment variable overriding the cache directory.
inline constexpr const char* kCacheDirEnv = "LMSTAT_CACHE_DIR";

/// $LMSTAT_CACHE_DIR, else $XDG_CACHE_HOME/lmstat, else $HOME/.cache/lmstat.
std::optional<std::filesystem::path> default_cache_dir();

/// {regime, d, s, resolution, cos_block, sin_block, eigenvalues}
nlohmann::json kernel_to_json(const kernel::KernelMatrix& m, const kernel::EigenSpectrum& spectrum);
kernel::KernelMatrix kernel_from_json(const nlohmann::json& j);
kernel::EigenSpectrum spectrum_from_json(const nlohmann::json& j);

class DiskCache {
 public:
  /// A disengaged directory disables persistence.
  explicit DiskCache(std::optional<std::filesystem::path> dir);

  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

  struct KernelEntry {
    kernel::KernelMatrix matrix;
    kernel::EigenSpectrum spectrum;
  };

  std::optional<KernelEntry> load_kernel(kernel::KernelRegime regime, std::optional<double> d, int s,
                                         int resolution) const;
  void store_kernel(const kernel::KernelMatrix& m, const kernel::EigenSpectrum& spectrum) const;

  std::optional<double> load_quantile(int s, double alpha, int resolution) const;
  void store_quantile(int s, double alpha, int resolution, double value) const;

  std::filesystem::path kernel_path(kernel::KernelRegime regime, std::optional<double> d, int s,
                                    int resolution) const;
  std::filesystem::path quantile_path(int s, double alpha, int resolution) const;

 private:
  std::optional<nlohmann::json> read(const std::filesystem::path& p) const;
  void write(const std::filesystem::path& p, const nlohmann::json& j) const;

  std::optional<std::filesystem::path> dir_;
};

}  // namespace lmstat::cache
