#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qadapt/case1.hpp"
#include "qadapt/case2.hpp"

namespace qadapt {

enum class Technique { kNone, kIdeal, kSnc, kDmc, kCm, kImm, kAsnc, kAdmc };

std::string technique_name(Technique t);
/// Accepts the lowercase names printed by technique_name(). Throws ConfigError.
Technique parse_technique(const std::string& name);
bool uses_empirical_acceleration(Technique t);

struct ScenarioConfig {
  enum class Kind { kCase1, kCase2 };
  std::string name = "case1-stochastic";
  Kind kind = Kind::kCase1;
  Case1Config case1;
  Case2Config case2;

  void validate() const;
};

struct Metric {
  std::string name;
  double value = 0.0;
};

/// Per-step values for one run, one column per named quantity.
struct RunSeries {
  std::vector<std::string> names;
  std::vector<double> t;
  std::vector<std::vector<double>> values;  // values[step][column]
};

struct RunResult {
  std::uint64_t run = 0;
  bool diverged = false;
  std::string failure;
  std::vector<Metric> metrics;
  int nonpsd_q = 0;
  int floored_weights = 0;
  int degenerate_axes = 0;
  int imm_underflows = 0;
  int excluded_outages = 0;
  int filter_calls = 0;
  double seconds = 0.0;  // wall clock inside the filter loop
  std::optional<RunSeries> series;

  const Metric* find(const std::string& name) const;
};

struct Aggregate {
  std::string technique;
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
  int runs = 0;
  std::uint64_t seed = 0;
};

struct CampaignResult {
  std::string scenario;
  std::string technique;  // label, may carry a variant suffix
  std::uint64_t seed = 0;
  int runs_requested = 0;
  std::vector<RunResult> runs;
  std::vector<Aggregate> aggregates;
  std::string manifest_json;

  const Aggregate* find(const std::string& metric) const;
  double value(const std::string& metric) const;  // NaN when absent
  int diverged() const;
  int nonpsd_q() const;
  double mean_seconds_per_call() const;
};

struct CampaignOptions {
  int runs = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  int series_runs = 0;  // how many leading runs keep their time series
  std::string label;    // technique label override
};

/// Independent seeded simulations; run i always uses the same random streams
/// regardless of thread count. Runs whose filter diverges (position error
/// beyond the configured multiple of the initial sigma for the configured
/// number of consecutive steps, or a numerical failure) are excluded from the
/// aggregates and counted.
CampaignResult run_campaign(const ScenarioConfig& config, Technique technique,
                            const CampaignOptions& options);

/// Same as run_campaign but reuses a precomputed Case II truth.
CampaignResult run_campaign(const ScenarioConfig& config, Technique technique,
                            const CampaignOptions& options,
                            std::shared_ptr<const Case2Truth> truth);

/// Mean absolute value per column of `errors` over samples with
/// t_begin <= t <= t_end. Throws std::invalid_argument on an empty window.
Vec compute_mae(const std::vector<double>& t, const std::vector<Vec>& errors, double t_begin,
                double t_end);

/// Mean and standard error of each metric over non-diverged runs.
std::vector<Aggregate> aggregate_runs(const std::vector<RunResult>& runs,
                                      const std::string& technique, std::uint64_t seed);

/// Writes aggregates.csv, runs.csv, series.csv, timing.csv and manifest.json
/// into `dir` (created if needed). Throws std::runtime_error on I/O failure.
void emit_results(const std::vector<CampaignResult>& results, const std::filesystem::path& dir);

/// Reads an aggregates.csv written by emit_results.
std::vector<Aggregate> read_aggregates(const std::filesystem::path& file);

}  // namespace qadapt
