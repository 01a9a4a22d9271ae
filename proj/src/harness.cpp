#include "lmstat/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "lmstat/error.hpp"
#include "lmstat/robinson.hpp"
#include "lmstat/stats.hpp"

namespace lmstat::harness {

namespace {

using json = nlohmann::json;

struct Cell {
  dgp::DgpSpec spec;
  std::vector<McRow> rows;
};

dgp::DgpSpec with_memory(dgp::DgpSpec spec, double d) {
  if (auto* f = std::get_if<dgp::Farima>(&spec.params)) {
    f->d = d;
  } else if (auto* a = std::get_if<dgp::Aggregated>(&spec.params)) {
    a->b = 2.0 - 2.0 * d;
  } else if (auto* b = std::get_if<dgp::Break>(&spec.params)) {
    b->d = d;
  }
  return spec;
}

std::vector<Cell> enumerate_cells(const McConfig& cfg) {
  std::vector<Cell> cells;
  for (const auto& tmpl : cfg.dgp_grid) {
    std::vector<dgp::DgpSpec> variants;
    if (cfg.d_grid.empty() || !tmpl.memory()) {
      variants.push_back(tmpl);
    } else {
      for (double d : cfg.d_grid) variants.push_back(with_memory(tmpl, d));
    }
    for (const auto& v : variants) {
      for (std::size_t n : cfg.n_grid) {
        Cell cell;
        cell.spec = v;
        cell.spec.n = n;
        for (TestKind t : cfg.tests) {
          McRow row;
          row.dgp = std::string(dgp::to_string(v.kind()));
          row.params = v.describe_params();
          row.n = n;
          row.d = v.memory();
          row.test = t;
          row.alpha = cfg.alpha;
          if (t == TestKind::Q || t == TestKind::Qtilde) {
            for (int s : cfg.frequencies_for(n)) {
              row.s = s;
              cell.rows.push_back(row);
            }
          } else {
            cell.rows.push_back(row);
          }
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

// 1 reject, 0 fail to reject, -1 anomaly.
std::int8_t evaluate(const McRow& row, std::span<const double> x, double critical, int qmax) {
  try {
    switch (row.test) {
      case TestKind::Q:
      case TestKind::Qtilde: {
        const auto variant = row.test == TestKind::Q ? stats::Variant::Q : stats::Variant::Qtilde;
        return stats::q_statistic(x, *row.s, variant).statistic < critical ? 1 : 0;
      }
      case TestKind::robinson:
      case TestKind::robinson_prewhitened: {
        const auto out = robinson::robinson_test(x, row.alpha, row.test == TestKind::robinson_prewhitened, qmax);
        return out.reject_nonstationarity ? 1 : 0;
      }
    }
  } catch (const DegenerateSeries&) {
    return -1;
  } catch (const ConvergenceError&) {
    return -1;
  }
  return -1;
}

void run_cell(Cell& cell, const McConfig& cfg, const std::vector<double>& criticals) {
  const auto reps = static_cast<std::size_t>(cfg.replications);
  const std::size_t nrows = cell.rows.size();
  std::vector<std::int8_t> outcome(reps * nrows, -1);
  std::vector<std::uint8_t> done(reps, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> out_of_time{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  const auto start = std::chrono::steady_clock::now();

  auto work = [&] {
    for (;;) {
      if (cfg.cell_time_budget_seconds) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        if (elapsed.count() > *cfg.cell_time_budget_seconds) {
          out_of_time = true;
          return;
        }
      }
      const std::size_t r = next.fetch_add(1);
      if (r >= reps) return;
      try {
        dgp::DgpSpec spec = cell.spec;
        spec.seed = derive_stream(cfg.master_seed, r);
        std::vector<double> x;
        try {
          x = dgp::simulate(spec);
        } catch (const ConvergenceError&) {
          done[r] = 1;
          continue;
        }
        for (std::size_t k = 0; k < nrows; ++k) {
          outcome[r * nrows + k] = evaluate(cell.rows[k], x, criticals[k], cfg.robinson_qmax);
        }
        done[r] = 1;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = reps;
        return;
      }
    }
  };

  unsigned workers = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, reps));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  // Only the completed prefix counts, so a truncated cell is still a
  // deterministic function of how many replications finished.
  std::size_t prefix = 0;
  while (prefix < reps && done[prefix]) ++prefix;
  for (std::size_t k = 0; k < nrows; ++k) {
    McRow& row = cell.rows[k];
    row.partial = prefix < reps || out_of_time.load();
    for (std::size_t r = 0; r < prefix; ++r) {
      const auto o = outcome[r * nrows + k];
      if (o < 0) {
        ++row.anomalies;
      } else {
        ++row.replications;
        row.rejections += o;
      }
    }
  }
}

template <class T>
T get_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

std::string_view to_string(TestKind t) noexcept {
  switch (t) {
    case TestKind::Q:
      return "Q";
    case TestKind::Qtilde:
      return "Qtilde";
    case TestKind::robinson:
      return "robinson";
    case TestKind::robinson_prewhitened:
      return "robinson_prewhitened";
  }
  return "unknown";
}

TestKind parse_test_kind(std::string_view name) {
  if (name == "Q") return TestKind::Q;
  if (name == "Qtilde") return TestKind::Qtilde;
  if (name == "robinson") return TestKind::robinson;
  if (name == "robinson_prewhitened") return TestKind::robinson_prewhitened;
  throw ValidationError("unknown test '" + std::string(name) +
                        "' (expected Q, Qtilde, robinson or robinson_prewhitened)");
}

const std::vector<int>& McConfig::frequencies_for(std::size_t n) const {
  const auto it = s_by_n.find(n);
  return it != s_by_n.end() ? it->second : s_grid;
}

void McConfig::validate() const {
  if (replications <= 0) throw ValidationError("replications must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (dgp_grid.empty()) throw ValidationError("dgp_grid must not be empty");
  if (n_grid.empty()) throw ValidationError("n_grid must not be empty");
  if (tests.empty()) throw ValidationError("tests must not be empty");
  if (robinson_qmax < 0) throw ValidationError("robinson_qmax must be nonnegative");
  if (cell_time_budget_seconds && !(*cell_time_budget_seconds > 0.0)) {
    throw ValidationError("cell_time_budget_seconds must be positive");
  }
  const bool spectral = std::any_of(tests.begin(), tests.end(),
                                    [](TestKind t) { return t == TestKind::Q || t == TestKind::Qtilde; });
  const bool robinson = std::any_of(tests.begin(), tests.end(), [](TestKind t) {
    return t == TestKind::robinson || t == TestKind::robinson_prewhitened;
  });
  const bool prewhitened = std::find(tests.begin(), tests.end(), TestKind::robinson_prewhitened) != tests.end();
  for (std::size_t n : n_grid) {
    if (n < 16) throw ValidationError("every n must be at least 16");
    if (robinson && n < robinson::kMinLength) {
      throw ValidationError("Robinson tests need n >= " + std::to_string(robinson::kMinLength));
    }
    if (prewhitened && n <= 10 * static_cast<std::size_t>(robinson_qmax)) {
      throw ValidationError("prewhitening with qmax = " + std::to_string(robinson_qmax) + " needs n > " +
                            std::to_string(10 * robinson_qmax));
    }
    if (spectral) {
      const auto& ss = frequencies_for(n);
      if (ss.empty()) throw ValidationError("no frequency counts s given for n = " + std::to_string(n));
      for (int s : ss) {
        if (s < 1 || static_cast<std::size_t>(s) > (n - 1) / 2) {
          throw ValidationError("s = " + std::to_string(s) + " is invalid for n = " + std::to_string(n));
        }
      }
    }
  }
  for (const auto& tmpl : dgp_grid) {
    if (d_grid.empty() || !tmpl.memory()) {
      dgp::DgpSpec probe = tmpl;
      probe.n = n_grid.front();
      probe.validate();
      continue;
    }
    for (double d : d_grid) {
      dgp::DgpSpec probe = with_memory(tmpl, d);
      probe.n = n_grid.front();
      probe.validate();
    }
  }
}

McConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("experiment config must be a JSON object");
  static const std::set<std::string> allowed{"dgp_grid", "d_grid",      "n_grid",      "s_grid",
                                             "s_by_n",   "tests",       "replications", "alpha",
                                             "master_seed", "workers", "cell_time_budget_seconds",
                                             "robinson_qmax", "description"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ValidationError("unknown config field '" + key + "'");
  }
  McConfig cfg;
  if (!j.contains("dgp_grid") || !j.at("dgp_grid").is_array()) throw ValidationError("config lacks a dgp_grid array");
  for (const auto& t : j.at("dgp_grid")) cfg.dgp_grid.push_back(dgp::dgp_from_json(t));
  cfg.d_grid = get_field<std::vector<double>>(j, "d_grid", {});
  cfg.n_grid = get_field<std::vector<std::size_t>>(j, "n_grid", {});
  cfg.s_grid = get_field<std::vector<int>>(j, "s_grid", {});
  if (j.contains("s_by_n")) {
    const auto& m = j.at("s_by_n");
    if (!m.is_object()) throw ValidationError("s_by_n must map n to a list of s");
    for (const auto& [key, value] : m.items()) {
      std::size_t n = 0;
      try {
        n = static_cast<std::size_t>(std::stoull(key));
      } catch (const std::exception&) {
        throw ValidationError("s_by_n key '" + key + "' is not an integer");
      }
      try {
        cfg.s_by_n[n] = value.get<std::vector<int>>();
      } catch (const json::exception& e) {
        throw ValidationError("s_by_n['" + key + "']: " + e.what());
      }
    }
  }
  if (j.contains("tests")) {
    cfg.tests.clear();
    for (const auto& name : get_field<std::vector<std::string>>(j, "tests", {})) {
      cfg.tests.push_back(parse_test_kind(name));
    }
  }
  cfg.replications = get_field<int>(j, "replications", cfg.replications);
  cfg.alpha = get_field<double>(j, "alpha", cfg.alpha);
  cfg.master_seed = get_field<std::uint64_t>(j, "master_seed", cfg.master_seed);
  cfg.workers = get_field<unsigned>(j, "workers", cfg.workers);
  if (j.contains("cell_time_budget_seconds") && !j.at("cell_time_budget_seconds").is_null()) {
    cfg.cell_time_budget_seconds = get_field<double>(j, "cell_time_budget_seconds", 0.0);
  }
  cfg.robinson_qmax = get_field<int>(j, "robinson_qmax", cfg.robinson_qmax);
  cfg.validate();
  return cfg;
}

json to_json(const McConfig& cfg) {
  json j;
  j["dgp_grid"] = json::array();
  for (const auto& t : cfg.dgp_grid) {
    json tj = dgp::to_json(t);
    tj.erase("seed");
    tj.erase("n");
    tj.erase("implied_d");
    j["dgp_grid"].push_back(tj);
  }
  j["d_grid"] = cfg.d_grid;
  j["n_grid"] = cfg.n_grid;
  j["s_grid"] = cfg.s_grid;
  json sbn = json::object();
  for (const auto& [n, ss] : cfg.s_by_n) sbn[std::to_string(n)] = ss;
  j["s_by_n"] = sbn;
  j["tests"] = json::array();
  for (TestKind t : cfg.tests) j["tests"].push_back(std::string(to_string(t)));
  j["replications"] = cfg.replications;
  j["alpha"] = cfg.alpha;
  j["master_seed"] = cfg.master_seed;
  j["workers"] = cfg.workers;
  j["cell_time_budget_seconds"] = cfg.cell_time_budget_seconds ? json(*cfg.cell_time_budget_seconds) : json(nullptr);
  j["robinson_qmax"] = cfg.robinson_qmax;
  return j;
}

McConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

double McRow::rate() const noexcept {
  return replications > 0 ? static_cast<double>(rejections) / replications : 0.0;
}

double McRow::binomial_se() const noexcept {
  if (replications <= 0) return 0.0;
  const double r = rate();
  return std::sqrt(r * (1.0 - r) / replications);
}

McTable run_experiment(const McConfig& cfg, nulldist::CriticalValues& critical, const ProgressFn& progress) {
  cfg.validate();
  auto cells = enumerate_cells(cfg);
  McTable table;
  for (auto& cell : cells) {
    std::vector<double> criticals;
    criticals.reserve(cell.rows.size());
    for (const auto& row : cell.rows) {
      criticals.push_back(row.s ? critical.quantile(*row.s, cfg.alpha) : 0.0);
    }
    run_cell(cell, cfg, criticals);
    for (auto& row : cell.rows) {
      if (progress) progress(row);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string table_to_csv_string(const McTable& t) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : t.rows) {
    out += csv_field(r.dgp) + ',' + csv_field(r.params) + ',' + std::to_string(r.n) + ',';
    out += (r.d ? fmt_g(*r.d) : std::string()) + ',';
    out += (r.s ? std::to_string(*r.s) : std::string()) + ',';
    out += std::string(to_string(r.test)) + ',' + fmt_g(r.alpha) + ',' + fmt_fixed(r.rate()) + ',' +
           fmt_fixed(r.binomial_se()) + ',' + std::to_string(r.replications) + '\n';
  }
  return out;
}

void table_to_csv(const McTable& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << table_to_csv_string(t);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

McTable table_from_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ValidationError(path.string() + ": missing or unexpected CSV header");
  }
  McTable t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 10 fields");
    }
    try {
      McRow r;
      r.dgp = f[0];
      r.params = f[1];
      r.n = static_cast<std::size_t>(std::stoull(f[2]));
      if (!f[3].empty()) r.d = std::stod(f[3]);
      if (!f[4].empty()) r.s = std::stoi(f[4]);
      r.test = parse_test_kind(f[5]);
      r.alpha = std::stod(f[6]);
      r.replications = std::stoi(f[9]);
      r.rejections = static_cast<int>(std::lround(std::stod(f[7]) * r.replications));
      t.rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return t;
}

}  // namespace lmstat::harness
