#include "lmstat/cache.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include "lmstat/error.hpp"

namespace lmstat::cache {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string key_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, std::size_t n) {
  if (!rows.is_array() || rows.size() != n) throw ValidationError("kernel block has wrong shape");
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = rows.at(i);
    if (!row.is_array() || row.size() != n) throw ValidationError("kernel block has wrong shape");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = row.at(j).get<double>();
  }
  return m;
}

}  // namespace

std::optional<fs::path> default_cache_dir() {
  if (const char* env = std::getenv(kCacheDirEnv); env && *env) return fs::path(env);
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "lmstat";
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "lmstat";
  return std::nullopt;
}

json kernel_to_json(const kernel::KernelMatrix& m, const kernel::EigenSpectrum& spectrum) {
  json j;
  j["regime"] = std::string(kernel::to_string(m.regime));
  j["d"] = m.d ? json(*m.d) : json(nullptr);
  j["s"] = m.s;
  j["resolution"] = m.resolution;
  j["cos_block"] = matrix_to_json(m.cos_block);
  j["sin_block"] = matrix_to_json(m.sin_block);
  json eig = json::array();
  for (std::size_t i = 1; i < spectrum.weights.size(); ++i) eig.push_back(spectrum.weights[i]);
  j["eigenvalues"] = std::move(eig);
  return j;
}

kernel::KernelMatrix kernel_from_json(const json& j) {
  kernel::KernelMatrix m;
  m.regime = kernel::parse_kernel_regime(j.at("regime").get<std::string>());
  if (!j.at("d").is_null()) m.d = j.at("d").get<double>();
  m.s = j.at("s").get<int>();
  m.resolution = j.at("resolution").get<int>();
  if (m.s < 1) throw ValidationError("kernel file has s < 1");
  m.cos_block = matrix_from_json(j.at("cos_block"), static_cast<std::size_t>(m.s));
  m.sin_block = matrix_from_json(j.at("sin_block"), static_cast<std::size_t>(m.s));
  return m;
}

kernel::EigenSpectrum spectrum_from_json(const json& j) {
  kernel::EigenSpectrum sp;
  sp.weights.push_back(1.0);
  for (const auto& v : j.at("eigenvalues")) sp.weights.push_back(v.get<double>());
  if (sp.weights.size() != 2 * static_cast<std::size_t>(j.at("s").get<int>()) + 1) {
    throw ValidationError("kernel file has the wrong number of eigenvalues");
  }
  return sp;
}

DiskCache::DiskCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {}

fs::path DiskCache::kernel_path(kernel::KernelRegime regime, std::optional<double> d, int s,
                                int resolution) const {
  std::ostringstream name;
  name << "kernel_" << kernel::to_string(regime) << "_d" << (d ? key_number(*d) : std::string("none")) << "_s" << s
       << "_r" << resolution << ".json";
  return dir_.value_or(fs::path{}) / name.str();
}

fs::path DiskCache::quantile_path(int s, double alpha, int resolution) const {
  std::ostringstream name;
  name << "quantile_s" << s << "_a" << key_number(alpha) << "_r" << resolution << ".json";
  return dir_.value_or(fs::path{}) / name.str();
}

std::optional<json> DiskCache::read(const fs::path& p) const {
  if (!dir_) return std::nullopt;
  std::ifstream in(p);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void DiskCache::write(const fs::path& p, const json& j) const {
  if (!dir_) return;
  std::error_code ec;
  fs::create_directories(*dir_, ec);
  if (ec) return;
  std::random_device rd;
  fs::path tmp = p;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp);
    if (!out) return;
    out << j.dump() << '\n';
    if (!out) {
      fs::remove(tmp, ec);
      return;
    }
  }
  fs::rename(tmp, p, ec);
  if (ec) fs::remove(tmp, ec);
}

std::optional<DiskCache::KernelEntry> DiskCache::load_kernel(kernel::KernelRegime regime, std::optional<double> d,
                                                             int s, int resolution) const {
  const auto j = read(kernel_path(regime, d, s, resolution));
  if (!j) return std::nullopt;
  try {
    KernelEntry e{kernel_from_json(*j), spectrum_from_json(*j)};
    if (e.matrix.regime != regime || e.matrix.s != s || e.matrix.resolution != resolution) return std::nullopt;
    return e;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void DiskCache::store_kernel(const kernel::KernelMatrix& m, const kernel::EigenSpectrum& spectrum) const {
  write(kernel_path(m.regime, m.d, m.s, m.resolution), kernel_to_json(m, spectrum));
}

std::optional<double> DiskCache::load_quantile(int s, double alpha, int resolution) const {
  const auto j = read(quantile_path(s, alpha, resolution));
  if (!j) return std::nullopt;
  try {
    if (j->at("s").get<int>() != s || j->at("resolution").get<int>() != resolution ||
        j->at("alpha").get<double>() != alpha) {
      return std::nullopt;
    }
    return j->at("quantile").get<double>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void DiskCache::store_quantile(int s, double alpha, int resolution, double value) const {
  write(quantile_path(s, alpha, resolution),
        json{{"s", s}, {"alpha", alpha}, {"resolution", resolution}, {"quantile", value}, {"method", "cf-inversion"}});
}

}  // namespace lmstat::cache
