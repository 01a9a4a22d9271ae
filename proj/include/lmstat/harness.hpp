#pragma once

// Monte Carlo rejection-rate experiments over grids of DGPs, memory
// parameters, sample sizes and frequency counts.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmstat/dgp.hpp"
#include "lmstat/nulldist.hpp"

namespace lmstat::harness {

enum class TestKind { Q, Qtilde, robinson, robinson_prewhitened };

std::string_view to_string(TestKind t) noexcept;
TestKind parse_test_kind(std::string_view name);

struct McConfig {
  /// Templates; n and seed are overwritten per cell and replication.
  std::vector<dgp::DgpSpec> dgp_grid;
  /// Substituted into every template with a memory parameter (b = 2 - 2d for
  /// aggregated designs). Empty: each template keeps its own value.
  std::vector<double> d_grid;
  std::vector<std::size_t> n_grid;
  /// Frequency counts for n values not listed in s_by_n.
  std::vector<int> s_grid;
  std::map<std::size_t, std::vector<int>> s_by_n;
  std::vector<TestKind> tests{TestKind::Q};
  int replications = 500;
  double alpha = 0.05;
  std::uint64_t master_seed = 1;
  /// 0: one worker per hardware thread.
  unsigned workers = 0;
  /// Wall-clock limit per cell; replications past it are not started.
  std::optional<double> cell_time_budget_seconds;
  int robinson_qmax = 3;

  /// Throws ValidationError (or DomainError for invalid DGP parameters).
  void validate() const;
  const std::vector<int>& frequencies_for(std::size_t n) const;
};

McConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const McConfig& cfg);
McConfig load_config(const std::filesystem::path& path);

struct McRow {
  std::string dgp;
  std::string params;
  std::size_t n = 0;
  std::optional<double> d;
  /// Absent for Robinson rows.
  std::optional<int> s;
  TestKind test = TestKind::Q;
  double alpha = 0.05;
  int rejections = 0;
  /// Replications where the statistic could not be computed.
  int anomalies = 0;
  /// Replications that produced a decision: rejections + non-rejections.
  int replications = 0;
  /// Set when the cell hit its time budget before all replications ran.
  bool partial = false;

  double rate() const noexcept;
  /// sqrt(rate (1 - rate) / replications).
  double binomial_se() const noexcept;
};

struct McTable {
  std::vector<McRow> rows;
};

using ProgressFn = std::function<void(const McRow&)>;

/// Replication r of every cell simulates with seed derive_stream(master_seed, r);
/// all tests and frequency counts of a cell are evaluated on the same series.
/// Results do not depend on the worker count.
McTable run_experiment(const McConfig& cfg, nulldist::CriticalValues& critical = nulldist::default_critical_values(),
                       const ProgressFn& progress = {});

inline constexpr std::string_view kCsvHeader = "dgp,kind-params,n,d,s,test,alpha,rate,se,reps";

std::string table_to_csv_string(const McTable& t);
/// Throws IoError naming the path.
void table_to_csv(const McTable& t, const std::filesystem::path& path);
/// Reads a file written by table_to_csv. Rejection and anomaly counts are
/// reconstructed from rate and reps.
McTable table_from_csv(const std::filesystem::path& path);

}  // namespace lmstat::harness
