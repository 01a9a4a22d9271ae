#include "lmstat/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include <boost/math/special_functions/zeta.hpp>

#include "lmstat/error.hpp"

namespace lmstat::dgp {

namespace {

using json = nlohmann::json;

// Durbin-Levinson prediction coefficients. Row t (t = 1..n-1) holds
// phi_{t,1..t}, packed at offset t(t-1)/2; sd[t] = sqrt(v_t).
struct DlPlan {
  std::vector<double> rows;
  std::vector<double> sd;
};

constexpr std::size_t kMaxPlannedLength = 4096;
constexpr std::size_t kPlanCacheEntries = 4;

void dl_step(const std::vector<double>& acf, std::size_t t, std::vector<double>& phi, double& v) {
  // phi holds phi_{t-1,1..t-1} on entry and phi_{t,1..t} on exit.
  double num = acf[t];
  for (std::size_t k = 1; k < t; ++k) num -= phi[k - 1] * acf[t - k];
  const double kappa = num / v;
  std::vector<double> next(t);
  for (std::size_t k = 1; k < t; ++k) next[k - 1] = phi[k - 1] - kappa * phi[t - k - 1];
  next[t - 1] = kappa;
  phi = std::move(next);
  v *= 1.0 - kappa * kappa;
  if (!(v > 0.0)) throw ConvergenceError("Durbin-Levinson prediction variance became nonpositive");
}

std::shared_ptr<const DlPlan> build_plan(double d, std::size_t n) {
  const auto acf = farima_acf_vector(d, n);
  auto plan = std::make_shared<DlPlan>();
  plan->rows.reserve(n * (n - 1) / 2);
  plan->sd.resize(n);
  double v = acf[0];
  plan->sd[0] = std::sqrt(v);
  std::vector<double> phi;
  for (std::size_t t = 1; t < n; ++t) {
    dl_step(acf, t, phi, v);
    plan->rows.insert(plan->rows.end(), phi.begin(), phi.end());
    plan->sd[t] = std::sqrt(v);
  }
  return plan;
}

std::shared_ptr<const DlPlan> cached_plan(double d, std::size_t n) {
  static std::mutex mutex;
  static std::list<std::pair<std::pair<double, std::size_t>, std::shared_ptr<const DlPlan>>> lru;
  const auto key = std::make_pair(d, n);
  {
    std::lock_guard lock(mutex);
    for (auto it = lru.begin(); it != lru.end(); ++it) {
      if (it->first == key) {
        lru.splice(lru.begin(), lru, it);
        return lru.front().second;
      }
    }
  }
  auto plan = build_plan(d, n);
  std::lock_guard lock(mutex);
  lru.emplace_front(key, plan);
  while (lru.size() > kPlanCacheEntries) lru.pop_back();
  return plan;
}

std::vector<double> standard_normals(std::size_t n, Engine& rng) {
  std::normal_distribution<double> z;
  std::vector<double> out(n);
  for (double& v : out) v = z(rng);
  return out;
}

// Stationary FARIMA(1,d,0) sample for d in [-1/2, 1/2).
std::vector<double> farima_ar(double d, double phi, std::size_t n, int burn_in, Engine& rng) {
  if (phi == 0.0) return farima_stationary(d, n, rng);
  const std::size_t burn = static_cast<std::size_t>(burn_in);
  const auto input = farima_stationary(d, n + burn, rng);
  std::vector<double> out(n);
  double x = 0.0;
  for (std::size_t t = 0; t < n + burn; ++t) {
    x = phi * x + input[t];
    if (t >= burn) out[t - burn] = x;
  }
  return out;
}

bool finite_in(double v, double lo, double hi) { return std::isfinite(v) && v > lo && v < hi; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::shared_ptr<const DurationSampler> duration_sampler(double alpha) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const DurationSampler>> samplers;
  std::lock_guard lock(mutex);
  auto& slot = samplers[alpha];
  if (!slot) slot = std::make_shared<DurationSampler>(alpha);
  return slot;
}

template <class T>
T get_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ValidationError("unknown DGP field '" + key + "'");
  }
}

}  // namespace

double Trend::operator()(double u) const {
  if (samples.empty()) return 0.0;
  if (samples.size() == 1) return samples.front();
  const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(samples.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), samples.size() - 2);
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * samples[i] + w * samples[i + 1];
}

std::string_view to_string(Kind k) noexcept {
  switch (k) {
    case Kind::farima:
      return "farima";
    case Kind::aggregated:
      return "aggregated";
    case Kind::renewal:
      return "renewal";
    case Kind::structural_break:
      return "break";
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  if (name == "farima") return Kind::farima;
  if (name == "aggregated") return Kind::aggregated;
  if (name == "renewal") return Kind::renewal;
  if (name == "break") return Kind::structural_break;
  throw ValidationError("unknown DGP kind '" + std::string(name) + "' (expected farima, aggregated, renewal or break)");
}

Kind DgpSpec::kind() const noexcept { return static_cast<Kind>(params.index()); }

std::optional<double> DgpSpec::memory() const noexcept {
  if (const auto* f = std::get_if<Farima>(&params)) return f->d;
  if (const auto* a = std::get_if<Aggregated>(&params)) return a->implied_d();
  if (const auto* b = std::get_if<Break>(&params)) return b->d;
  return std::nullopt;
}

void DgpSpec::validate() const {
  if (n < 16) throw DomainError("n must be at least 16");
  if (burn_in < 0) throw DomainError("burn_in must be nonnegative");
  if (const auto* f = std::get_if<Farima>(&params)) {
    if (!finite_in(f->d, -0.5, 1.5)) throw DomainError("farima d must lie in (-1/2, 3/2)");
    if (!finite_in(f->phi, -1.0, 1.0)) throw DomainError("AR coefficient phi must lie in (-1, 1)");
  } else if (const auto* a = std::get_if<Aggregated>(&params)) {
    if (!(std::isfinite(a->a) && a->a > 0.0)) throw DomainError("aggregated a must be positive");
    if (!(std::isfinite(a->b) && a->b > 1.0)) {
      throw DomainError("aggregated b must exceed 1 (the aggregate does not exist for b <= 1)");
    }
    if (a->panels < 1) throw DomainError("aggregated panel count M must be at least 1");
  } else if (const auto* r = std::get_if<Renewal>(&params)) {
    if (!finite_in(r->c, 0.0, 1.0)) throw DomainError("renewal c must lie in (0, 1)");
    if (!finite_in(r->p, 0.0, 1.0)) throw DomainError("renewal p must lie in (0, 1)");
    if (!finite_in(r->alpha, 3.0, 4.0)) throw DomainError("renewal alpha must lie in (3, 4)");
  } else if (const auto* b = std::get_if<Break>(&params)) {
    if (!finite_in(b->d, -0.5, 0.5)) throw DomainError("break d must lie in (-1/2, 1/2)");
    if (!(std::isfinite(b->delta_break) && b->delta_break >= 0.0)) {
      throw DomainError("delta_break must be finite and nonnegative");
    }
    if (b->trend) {
      if (!(std::isfinite(b->trend->beta) && b->trend->beta >= 0.0)) throw DomainError("trend beta must be >= 0");
      if (b->trend->samples.size() < 2) throw DomainError("trend needs at least two samples");
      for (double v : b->trend->samples) {
        if (!std::isfinite(v)) throw DomainError("trend samples must be finite");
      }
    }
  }
}

std::string DgpSpec::describe_params() const {
  if (const auto* f = std::get_if<Farima>(&params)) return "phi=" + fmt(f->phi);
  if (const auto* a = std::get_if<Aggregated>(&params)) {
    return "a=" + fmt(a->a) + ";b=" + fmt(a->b) + ";M=" + std::to_string(a->panels);
  }
  if (const auto* r = std::get_if<Renewal>(&params)) {
    return "c=" + fmt(r->c) + ";p=" + fmt(r->p) + ";alpha=" + fmt(r->alpha);
  }
  const auto& b = std::get<Break>(params);
  if (b.trend) return "trend;beta=" + fmt(b.trend->beta);
  return "delta=" + fmt(b.delta_break);
}

json to_json(const DgpSpec& spec) {
  json j;
  j["kind"] = std::string(to_string(spec.kind()));
  j["n"] = spec.n;
  j["seed"] = spec.seed;
  j["burn_in"] = spec.burn_in;
  if (const auto* f = std::get_if<Farima>(&spec.params)) {
    j["d"] = f->d;
    j["phi"] = f->phi;
  } else if (const auto* a = std::get_if<Aggregated>(&spec.params)) {
    j["a"] = a->a;
    j["b"] = a->b;
    j["panels"] = a->panels;
    j["implied_d"] = a->implied_d();
  } else if (const auto* r = std::get_if<Renewal>(&spec.params)) {
    j["c"] = r->c;
    j["p"] = r->p;
    j["alpha"] = r->alpha;
  } else {
    const auto& b = std::get<Break>(spec.params);
    j["d"] = b.d;
    j["delta_break"] = b.delta_break;
    if (b.trend) j["trend"] = {{"beta", b.trend->beta}, {"samples", b.trend->samples}};
  }
  return j;
}

DgpSpec dgp_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("DGP spec must be a JSON object");
  if (!j.contains("kind")) throw ValidationError("DGP spec lacks 'kind'");
  const Kind kind = parse_kind(get_field<std::string>(j, "kind", ""));
  DgpSpec spec;
  spec.n = get_field<std::size_t>(j, "n", spec.n);
  spec.seed = get_field<std::uint64_t>(j, "seed", spec.seed);
  spec.burn_in = get_field<int>(j, "burn_in", spec.burn_in);
  switch (kind) {
    case Kind::farima:
      reject_unknown_keys(j, {"kind", "n", "seed", "burn_in", "d", "phi"});
      spec.params = Farima{get_field<double>(j, "d", 0.0), get_field<double>(j, "phi", 0.0)};
      break;
    case Kind::aggregated:
      reject_unknown_keys(j, {"kind", "n", "seed", "burn_in", "a", "b", "panels", "implied_d"});
      spec.params = Aggregated{get_field<double>(j, "a", 1.0), get_field<double>(j, "b", 1.5),
                               get_field<int>(j, "panels", 1000)};
      break;
    case Kind::renewal:
      reject_unknown_keys(j, {"kind", "n", "seed", "burn_in", "c", "p", "alpha"});
      spec.params = Renewal{get_field<double>(j, "c", 0.5), get_field<double>(j, "p", 0.5),
                            get_field<double>(j, "alpha", 3.5)};
      break;
    case Kind::structural_break: {
      reject_unknown_keys(j, {"kind", "n", "seed", "burn_in", "d", "delta_break", "trend"});
      Break b{get_field<double>(j, "d", 0.0), get_field<double>(j, "delta_break", 0.0), std::nullopt};
      if (j.contains("trend") && !j.at("trend").is_null()) {
        const auto& t = j.at("trend");
        if (!t.is_object()) throw ValidationError("'trend' must be an object");
        reject_unknown_keys(t, {"beta", "samples"});
        b.trend = Trend{get_field<double>(t, "beta", 0.0), get_field<std::vector<double>>(t, "samples", {})};
      }
      spec.params = std::move(b);
      break;
    }
  }
  spec.validate();
  return spec;
}

double farima_acf(double d, std::size_t h) {
  if (!(d >= -0.5 && d < 0.5)) throw DomainError("farima_acf requires d in [-1/2, 1/2)");
  double g = std::tgamma(1.0 - 2.0 * d) / (std::tgamma(1.0 - d) * std::tgamma(1.0 - d));
  for (std::size_t k = 1; k <= h; ++k) {
    const double kk = static_cast<double>(k);
    g *= (kk - 1.0 + d) / (kk - d);
  }
  return g;
}

std::vector<double> farima_acf_vector(double d, std::size_t count) {
  if (!(d >= -0.5 && d < 0.5)) throw DomainError("farima_acf requires d in [-1/2, 1/2)");
  std::vector<double> g(count);
  if (count == 0) return g;
  g[0] = farima_acf(d, 0);
  for (std::size_t k = 1; k < count; ++k) {
    const double kk = static_cast<double>(k);
    g[k] = g[k - 1] * (kk - 1.0 + d) / (kk - d);
  }
  return g;
}

double partial_sum_variance(double d, std::size_t n) {
  const auto g = farima_acf_vector(d, n);
  long double acc = static_cast<long double>(n) * g[0];
  for (std::size_t h = 1; h < n; ++h) acc += 2.0L * static_cast<long double>(n - h) * g[h];
  return static_cast<double>(acc);
}

std::vector<double> prediction_variances(double d, std::size_t n) {
  const auto acf = farima_acf_vector(d, n);
  std::vector<double> v(n);
  if (n == 0) return v;
  v[0] = acf[0];
  std::vector<double> phi;
  double cur = acf[0];
  for (std::size_t t = 1; t < n; ++t) {
    dl_step(acf, t, phi, cur);
    v[t] = cur;
  }
  return v;
}

std::vector<double> farima_stationary(double d, std::size_t n, Engine& rng) {
  if (!(d >= -0.5 && d < 0.5)) throw DomainError("stationary FARIMA requires d in [-1/2, 1/2)");
  auto z = standard_normals(n, rng);
  if (d == 0.0 || n == 0) return z;

  std::vector<double> x(n);
  if (n <= kMaxPlannedLength) {
    const auto plan = cached_plan(d, n);
    x[0] = plan->sd[0] * z[0];
    const double* row = plan->rows.data();
    for (std::size_t t = 1; t < n; ++t) {
      double pred = 0.0;
      for (std::size_t k = 1; k <= t; ++k) pred += row[k - 1] * x[t - k];
      x[t] = pred + plan->sd[t] * z[t];
      row += t;
    }
    return x;
  }

  const auto acf = farima_acf_vector(d, n);
  double v = acf[0];
  x[0] = std::sqrt(v) * z[0];
  std::vector<double> phi;
  for (std::size_t t = 1; t < n; ++t) {
    dl_step(acf, t, phi, v);
    double pred = 0.0;
    for (std::size_t k = 1; k <= t; ++k) pred += phi[k - 1] * x[t - k];
    x[t] = pred + std::sqrt(v) * z[t];
  }
  return x;
}

std::vector<double> simulate_farima(const DgpSpec& spec, Engine& rng) {
  spec.validate();
  const auto& f = std::get<Farima>(spec.params);
  if (f.d < 0.5) return farima_ar(f.d, f.phi, spec.n, spec.burn_in, rng);
  auto y = farima_ar(f.d - 1.0, f.phi, spec.n, spec.burn_in, rng);
  double level = 0.0;
  for (double& v : y) {
    level += v;
    v = level;
  }
  return y;
}

std::vector<double> simulate_aggregated(const DgpSpec& spec, Engine& rng) {
  spec.validate();
  const auto& a = std::get<Aggregated>(spec.params);
  std::gamma_distribution<double> ga(a.a, 1.0), gb(a.b, 1.0);
  std::normal_distribution<double> z;
  const double below_one = std::nextafter(1.0, 0.0);
  std::vector<double> sum(spec.n, 0.0);
  for (int j = 0; j < a.panels; ++j) {
    const double u = ga(rng), w = gb(rng);
    const double phi2 = std::min(u / (u + w), below_one);
    const double phi = std::sqrt(phi2);
    double y = z(rng) / std::sqrt(1.0 - phi2);
    for (std::size_t t = 0; t < spec.n; ++t) {
      y = phi * y + z(rng);
      sum[t] += y;
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(a.panels));
  for (double& v : sum) v *= scale;
  return sum;
}

DurationSampler::DurationSampler(double alpha) : alpha_(alpha), survival_(kTableSize + 1) {
  if (!finite_in(alpha, 1.0, 1e6)) throw DomainError("duration tail exponent must exceed 1");
  zeta_ = boost::math::zeta(alpha);
  const double big_k = static_cast<double>(kTableSize);
  // sum_{k > K} k^-alpha ~ int_{K+1/2}^inf x^-alpha dx
  survival_[kTableSize] = std::pow(big_k + 0.5, 1.0 - alpha) / ((alpha - 1.0) * zeta_);
  for (std::size_t k = kTableSize; k >= 1; --k) {
    survival_[k - 1] = survival_[k] + std::pow(static_cast<double>(k), -alpha) / zeta_;
  }
}

double DurationSampler::survival(std::size_t k) const {
  if (k <= kTableSize) return survival_[k];
  return std::pow(static_cast<double>(k) + 0.5, 1.0 - alpha_) / ((alpha_ - 1.0) * zeta_);
}

std::size_t DurationSampler::quantile_from_tail(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("tail probability must lie in (0, 1]");
  if (survival_[kTableSize] <= q) {
    const auto it = std::partition_point(survival_.begin() + 1, survival_.end(), [q](double s) { return s > q; });
    return static_cast<std::size_t>(it - survival_.begin());
  }
  const double k = std::ceil(std::pow(q * (alpha_ - 1.0) * zeta_, 1.0 / (1.0 - alpha_)) - 0.5);
  if (!(k < 1e18)) return static_cast<std::size_t>(1e18);
  return std::max(kTableSize + 1, static_cast<std::size_t>(k));
}

std::size_t DurationSampler::operator()(Engine& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return quantile_from_tail(1.0 - u(rng));
}

std::vector<double> simulate_renewal(const DgpSpec& spec, Engine& rng) {
  spec.validate();
  const auto& r = std::get<Renewal>(spec.params);
  const auto durations = duration_sampler(r.alpha);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  const std::size_t burn = static_cast<std::size_t>(spec.burn_in);
  const std::size_t total = spec.n + burn;
  std::vector<double> out;
  out.reserve(spec.n);
  double x = 0.0;
  std::size_t t = 0;
  while (t < total) {
    const std::size_t len = (*durations)(rng);
    const double coef = u(rng) < r.p ? 1.0 : r.c;
    for (std::size_t k = 0; k < len && t < total; ++k, ++t) {
      x = coef * x + z(rng);
      if (t >= burn) out.push_back(x);
    }
  }
  return out;
}

std::vector<double> simulate_break(const DgpSpec& spec, Engine& rng) {
  spec.validate();
  const auto& b = std::get<Break>(spec.params);
  auto y = farima_stationary(b.d, spec.n, rng);
  const std::size_t n = spec.n;
  if (b.trend) {
    const double scale = std::pow(static_cast<double>(n), b.trend->beta);
    for (std::size_t t = 1; t <= n; ++t) {
      y[t - 1] += scale * (*b.trend)(static_cast<double>(t) / static_cast<double>(n));
    }
  } else if (b.delta_break != 0.0) {
    for (std::size_t t = n / 2 + 1; t <= n; ++t) y[t - 1] += b.delta_break;
  }
  return y;
}

std::vector<double> simulate(const DgpSpec& spec) {
  Engine rng = make_engine(spec.seed);
  switch (spec.kind()) {
    case Kind::farima:
      return simulate_farima(spec, rng);
    case Kind::aggregated:
      return simulate_aggregated(spec, rng);
    case Kind::renewal:
      return simulate_renewal(spec, rng);
    case Kind::structural_break:
      return simulate_break(spec, rng);
  }
  throw ValidationError("unknown DGP kind");
}

}  // namespace lmstat::dgp
