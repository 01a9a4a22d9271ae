#include "lmstat/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lmstat/cache.hpp"
#include "lmstat/dgp.hpp"
#include "lmstat/error.hpp"
#include "lmstat/harness.hpp"
#include "lmstat/nulldist.hpp"
#include "lmstat/robinson.hpp"
#include "lmstat/stats.hpp"

namespace lmstat::cli {

namespace {

using json = nlohmann::json;

struct Common {
  std::string cache_dir;
  int resolution = 2048;
  bool quiet = false;
};

nulldist::CriticalValues make_critical(const Common& c) {
  nulldist::CriticalValues::Options opts;
  opts.resolution = c.resolution;
  if (!c.cache_dir.empty()) {
    opts.cache_dir = c.cache_dir;
  } else {
    opts.cache_dir = cache::default_cache_dir();
  }
  return nulldist::CriticalValues(opts);
}

std::vector<double> load_series(const std::string& path) {
  if (path.empty() || path == "-") return read_series(std::cin, "<stdin>");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open series file " + path);
  return read_series(in, path);
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---- test -------------------------------------------------------------------

struct TestArgs {
  std::string input = "-";
  int s = 1;
  double alpha = 0.05;
  std::string variant = "q";
  bool two_sided = false;
};

int run_test_cmd(const TestArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  stats::Series series(load_series(a.input));
  auto critical = make_critical(c);
  const auto variant = stats::parse_variant(a.variant);
  const auto r = stats::run_test(series, a.s, a.alpha, variant, a.two_sided, critical);
  json j{{"n", series.size()},
         {"s", r.s},
         {"alpha", r.alpha},
         {"variant", std::string(stats::to_string(r.variant))},
         {"statistic", r.statistic},
         {"critical_low", r.critical_low},
         {"critical_high", r.critical_high ? json(*r.critical_high) : json(nullptr)},
         {"decision", std::string(stats::to_string(r.decision))},
         {"dn_term", r.dn_term},
         {"periodogram_term", r.periodogram_term}};
  out << j.dump(2) << '\n';
  if (!c.quiet) {
    err << stats::to_string(r.variant) << "(" << r.s << ") = " << g10(r.statistic) << ", critical "
        << g10(r.critical_low);
    if (r.critical_high) err << " / " << g10(*r.critical_high);
    err << ": " << stats::to_string(r.decision) << '\n';
  }
  return kExitOk;
}

// ---- robinson ---------------------------------------------------------------

struct RobinsonArgs {
  std::string input = "-";
  double alpha = 0.05;
  bool prewhiten = false;
  int qmax = robinson::kDefaultQmax;
};

int run_robinson_cmd(const RobinsonArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const stats::Series series(load_series(a.input));
  const auto r = robinson::robinson_test(series.values(), a.alpha, a.prewhiten, a.qmax);
  json j{{"n", series.size()},
         {"n_effective", r.stat.n},
         {"a_tilde", r.stat.a_tilde},
         {"sigma2_tilde", r.stat.sigma2_tilde},
         {"A_tilde", r.stat.A_tilde},
         {"r_tilde", r.stat.r_tilde},
         {"prewhitened", r.stat.prewhitened},
         {"ar_order", r.stat.ar_order},
         {"alpha", r.alpha},
         {"critical", r.critical},
         {"decision", r.reject_nonstationarity ? "reject-nonstationarity" : "fail-to-reject"}};
  out << j.dump(2) << '\n';
  if (!c.quiet) {
    err << "r~ = " << g10(r.stat.r_tilde) << ", critical " << g10(r.critical) << ": "
        << (r.reject_nonstationarity ? "reject-nonstationarity" : "fail-to-reject") << '\n';
  }
  return kExitOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string kind = "farima";
  std::string spec_file;
  std::size_t n = 500;
  std::uint64_t seed = 1;
  int burn_in = dgp::kDefaultBurnIn;
  double d = 0.0, phi = 0.0;
  double a = 1.0, b = 1.5;
  int panels = 1000;
  double c = 0.5, p = 0.5, tail = 3.5;
  double delta_break = 0.0;
  std::string out;
};

dgp::DgpSpec spec_from_flags(const SimulateArgs& s, const CLI::App& app) {
  const auto given = [&](const char* name) { return app.count(name) > 0; };
  const auto forbid = [&](std::initializer_list<const char*> names, const char* kind) {
    for (const char* n : names) {
      if (given(n)) throw ValidationError(std::string(n) + " does not apply to --kind " + kind);
    }
  };
  dgp::DgpSpec spec;
  spec.n = s.n;
  spec.seed = s.seed;
  spec.burn_in = s.burn_in;
  switch (dgp::parse_kind(s.kind)) {
    case dgp::Kind::farima:
      forbid({"--a", "--b", "--panels", "--c", "--p", "--tail-exponent", "--delta-break"}, "farima");
      spec.params = dgp::Farima{s.d, s.phi};
      break;
    case dgp::Kind::aggregated:
      forbid({"--d", "--phi", "--c", "--p", "--tail-exponent", "--delta-break"}, "aggregated");
      spec.params = dgp::Aggregated{s.a, s.b, s.panels};
      break;
    case dgp::Kind::renewal:
      forbid({"--d", "--phi", "--a", "--b", "--panels", "--delta-break"}, "renewal");
      spec.params = dgp::Renewal{s.c, s.p, s.tail};
      break;
    case dgp::Kind::structural_break:
      forbid({"--phi", "--a", "--b", "--panels", "--c", "--p", "--tail-exponent"}, "break");
      spec.params = dgp::Break{s.d, s.delta_break, std::nullopt};
      break;
  }
  spec.validate();
  return spec;
}

int run_simulate_cmd(const SimulateArgs& s, const CLI::App& app, const Common& c, std::ostream& out,
                     std::ostream& err) {
  dgp::DgpSpec spec;
  if (!s.spec_file.empty()) {
    std::ifstream in(s.spec_file);
    if (!in) throw IoError("cannot open spec file " + s.spec_file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ValidationError("spec file " + s.spec_file + " is not valid JSON: " + e.what());
    }
    spec = dgp::dgp_from_json(j);
  } else {
    spec = spec_from_flags(s, app);
  }
  const auto x = dgp::simulate(spec);

  std::string text = "# " + dgp::to_json(spec).dump() + '\n';
  for (double v : x) text += g17(v) + '\n';
  if (s.out.empty()) {
    out << text;
  } else {
    std::ofstream f(s.out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + s.out + " for writing");
    f << text;
    if (!f) throw IoError("failed writing " + s.out);
  }
  if (!c.quiet) err << "simulated " << x.size() << " values of " << dgp::to_string(spec.kind()) << '\n';
  return kExitOk;
}

// ---- quantile ---------------------------------------------------------------

struct QuantileArgs {
  std::vector<int> s{1};
  std::vector<double> alpha{0.05};
  std::string method = "cf-inversion";
  std::size_t draws = 1'000'000;
  std::uint64_t seed = 1;
};

int run_quantile_cmd(const QuantileArgs& q, const Common& c, std::ostream& out, std::ostream& err) {
  nulldist::Method method;
  if (q.method == "cf-inversion") {
    method = nulldist::Method::cf_inversion;
  } else if (q.method == "monte-carlo") {
    method = nulldist::Method::monte_carlo;
  } else {
    throw ValidationError("unknown method '" + q.method + "' (expected cf-inversion or monte-carlo)");
  }
  for (double a : q.alpha) {
    if (!(a > 0.0 && a < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  }
  for (int s : q.s) {
    if (s < 1) throw ValidationError("s must be at least 1");
  }
  auto critical = make_critical(c);
  out << "alpha,s,quantile,method\n";
  for (int s : q.s) {
    std::optional<nulldist::NullDistribution> mc;
    if (method == nulldist::Method::monte_carlo) {
      mc.emplace(critical.spectrum(s), method, q.draws, q.seed);
    }
    for (double a : q.alpha) {
      const double v = mc ? nulldist::critical_value(*mc, a) : critical.quantile(s, a);
      out << g10(a) << ',' << s << ',' << g10(v) << ',' << nulldist::to_string(method) << '\n';
      if (!c.quiet) err << "q(" << g10(a) << ", " << s << ") = " << g10(v) << '\n';
    }
  }
  return kExitOk;
}

// ---- table ------------------------------------------------------------------

struct TableArgs {
  std::string config;
  std::string out;
  std::optional<unsigned> workers;
  std::optional<int> replications;
  std::optional<std::uint64_t> seed;
};

int run_table_cmd(const TableArgs& t, const Common& c, std::ostream& out, std::ostream& err) {
  auto cfg = harness::load_config(t.config);
  if (t.workers) cfg.workers = *t.workers;
  if (t.replications) cfg.replications = *t.replications;
  if (t.seed) cfg.master_seed = *t.seed;
  cfg.validate();
  auto critical = make_critical(c);
  int anomalies = 0, partial = 0;
  const auto progress = [&](const harness::McRow& r) {
    anomalies += r.anomalies;
    partial += r.partial ? 1 : 0;
    if (c.quiet) return;
    err << r.dgp << ' ' << r.params << " n=" << r.n;
    if (r.d) err << " d=" << g10(*r.d);
    if (r.s) err << " s=" << *r.s;
    err << ' ' << harness::to_string(r.test) << ": " << g10(r.rate()) << " (" << r.replications << " reps";
    if (r.anomalies) err << ", " << r.anomalies << " anomalies";
    if (r.partial) err << ", partial";
    err << ")\n";
  };
  const auto table = harness::run_experiment(cfg, critical, progress);
  if (t.out.empty() || t.out == "-") {
    out << harness::table_to_csv_string(table);
  } else {
    harness::table_to_csv(table, t.out);
  }
  if (!c.quiet) {
    err << table.rows.size() << " rows";
    if (anomalies) err << ", " << anomalies << " anomalous replications";
    if (partial) err << ", " << partial << " rows truncated by the time budget";
    err << '\n';
  }
  return kExitOk;
}

}  // namespace

std::vector<double> read_series(std::istream& in, std::string_view source) {
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    if (*begin == '+') ++begin;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
      throw ValidationError(std::string(source) + ":" + std::to_string(lineno) + ": not a number: '" +
                            line.substr(first, last - first + 1) + "'");
    }
    values.push_back(v);
  }
  return values;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral test of nonstationarity against long-memory stationarity", "lmstat"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "lmstat 0.1.0");
  Common common;
  app.add_option("--cache-dir", common.cache_dir,
                 std::string("Cache directory for kernels and quantiles (default: $") + cache::kCacheDirEnv +
                     ", then the XDG cache)");
  app.add_option("--resolution", common.resolution, "Quadrature cells per axis for kernel matrices")
      ->check(CLI::Range(64, 1 << 14));
  app.add_flag("-q,--quiet", common.quiet, "Suppress the summary on standard error");

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Q-test of d = 1/2 against d < 1/2; prints JSON");
  test->add_option("input", ta.input, "Series file, one value per line ('-' for stdin)");
  test->add_option("--s", ta.s, "Number of Fourier frequencies")->check(CLI::PositiveNumber);
  test->add_option("--alpha", ta.alpha, "Significance level");
  test->add_option("--variant", ta.variant, "Statistic variant")->check(CLI::IsMember({"q", "qtilde"}));
  test->add_flag("--two-sided", ta.two_sided, "Two-sided rejection region");

  RobinsonArgs ra;
  auto* rob = app.add_subcommand("robinson", "Robinson r~ test of d = 1/2; prints JSON");
  rob->add_option("input", ra.input, "Series file, one value per line ('-' for stdin)");
  rob->add_option("--alpha", ra.alpha, "Significance level");
  rob->add_flag("--prewhiten", ra.prewhiten, "Replace U by AR(q) residuals, q <= qmax chosen by AIC");
  rob->add_option("--qmax", ra.qmax, "Largest AR order for prewhitening")->check(CLI::NonNegativeNumber);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Simulate a DGP; prints a '#' JSON header and one value per line");
  sim->add_option("--kind", sa.kind, "farima, aggregated, renewal or break")
      ->check(CLI::IsMember({"farima", "aggregated", "renewal", "break"}));
  sim->add_option("--spec", sa.spec_file, "JSON DGP spec file (replaces the parameter flags)");
  sim->add_option("--n", sa.n, "Sample size");
  sim->add_option("--seed", sa.seed, "64-bit seed");
  sim->add_option("--burn-in", sa.burn_in, "Discarded warm-up values (AR and renewal recursions)");
  sim->add_option("--d", sa.d, "Memory parameter (farima, break)");
  sim->add_option("--phi", sa.phi, "AR(1) coefficient (farima)");
  sim->add_option("--a", sa.a, "Beta shape a (aggregated)");
  sim->add_option("--b", sa.b, "Beta shape b > 1 (aggregated)");
  sim->add_option("--panels", sa.panels, "Panel count M (aggregated)");
  sim->add_option("--c", sa.c, "Contracting coefficient c (renewal)");
  sim->add_option("--p", sa.p, "P(A = 1) (renewal)");
  sim->add_option("--tail-exponent", sa.tail, "Duration tail exponent alpha in (3, 4) (renewal)");
  sim->add_option("--delta-break", sa.delta_break, "Mean shift after n/2 (break)");
  sim->add_option("--out", sa.out, "Output file (default: stdout)");

  QuantileArgs qa;
  auto* quant = app.add_subcommand("quantile", "Quantiles q(alpha, s) of the null law; prints CSV");
  quant->add_option("--s", qa.s, "Number of Fourier frequencies (repeatable)")->delimiter(',');
  quant->add_option("--alpha", qa.alpha, "Probability levels (repeatable)")->delimiter(',');
  quant->add_option("--method", qa.method, "cf-inversion or monte-carlo")
      ->check(CLI::IsMember({"cf-inversion", "monte-carlo"}));
  quant->add_option("--draws", qa.draws, "Monte Carlo draws")->check(CLI::PositiveNumber);
  quant->add_option("--seed", qa.seed, "Monte Carlo seed");

  TableArgs tb;
  auto* table = app.add_subcommand("table", "Run a Monte Carlo rejection-rate experiment; writes CSV");
  table->add_option("--config", tb.config, "Experiment config (JSON)")->required();
  table->add_option("--out", tb.out, "CSV output path (default: stdout)");
  table->add_option("--workers", tb.workers, "Worker threads (0: all hardware threads)");
  table->add_option("--replications", tb.replications, "Override the configured replication count");
  table->add_option("--seed", tb.seed, "Override the configured master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*test) return run_test_cmd(ta, common, out, err);
    if (*rob) return run_robinson_cmd(ra, common, out, err);
    if (*sim) return run_simulate_cmd(sa, *sim, common, out, err);
    if (*quant) return run_quantile_cmd(qa, common, out, err);
    if (*table) return run_table_cmd(tb, common, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DegenerateSeries& e) {
    err << "error: degenerate series: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace lmstat::cli
