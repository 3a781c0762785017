#pragma once

// STL-vs-MTL comparison protocol: one normalizer fitted on the training
// slice, both arms trained from the same seed on the same anchors, and the
// main-task forecast t(n) scored by RMSE in veh/h over the test anchors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mtlflow/data.hpp"
#include "mtlflow/network.hpp"
#include "mtlflow/trainer.hpp"

namespace mtlflow {

struct ExperimentConfig {
  std::size_t window_len = 5;
  std::size_t hidden = 15;
  std::size_t train_count = 2112;
  LmConfig lm;

  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct PredictionTrace {
  std::vector<std::size_t> anchors;
  std::vector<double> actual;     // veh/h
  std::vector<double> predicted;  // veh/h

  std::size_t size() const noexcept { return anchors.size(); }
  void validate() const;

  friend bool operator==(const PredictionTrace&, const PredictionTrace&) = default;
};

/// sqrt(mean((predicted - actual)^2)). Throws InvalidArgument on empty or
/// mismatched input.
double rmse(std::span<const double> predicted, std::span<const double> actual);

/// 100 * (rmse_stl - rmse_mtl) / rmse_stl, negative when MTL is worse.
/// Throws InvalidArgument unless rmse_stl > 0.
double improvement(double rmse_stl, double rmse_mtl);

struct ArmSummary {
  StopReason reason = StopReason::kMaxEpochs;
  std::size_t epochs = 0;
  double train_mse = 0.0;
};

struct EvaluationReport {
  std::string link_id;
  double rmse_stl = 0.0;
  double rmse_mtl = 0.0;
  double improvement_pct = 0.0;
  ArmSummary stl;
  ArmSummary mtl;
  std::uint64_t seed = 0;
  std::size_t train_samples = 0;
  std::size_t test_count = 0;
  NormalizationParams normalizer;
  ExperimentConfig config;
};

struct ComparisonResult {
  EvaluationReport report;
  PredictionTrace stl_trace;
  PredictionTrace mtl_trace;
};

/// Denormalized main-task forecasts of `params` for every anchor in `range`.
PredictionTrace forecast_main_task(const MlpParams& params, const TaskLayout& layout,
                                   std::span<const double> raw_series,
                                   const NormalizationParams& normalizer, AnchorRange range);

ComparisonResult run_comparison(const TimeSeries& series, const ExperimentConfig& cfg);

/// One comparison per seed (overriding cfg.lm.seed), fanned out over up to
/// `max_threads` workers (0: hardware concurrency). Results are in seed order.
std::vector<ComparisonResult> run_seeds(const TimeSeries& series, const ExperimentConfig& cfg,
                                        std::span<const std::uint64_t> seeds,
                                        unsigned max_threads = 0);

double median(std::vector<double> values);

struct TableRow {
  std::string link_id;
  double rmse_stl = 0.0;
  double rmse_mtl = 0.0;
  double improvement_pct = 0.0;
};

TableRow to_row(const EvaluationReport& report);

/// Runs one comparison per series, using the per-link override when present.
/// Throws InvalidArgument for an empty series set.
std::vector<TableRow> run_table(std::span<const TimeSeries> series, const ExperimentConfig& base,
                                const std::map<std::string, ExperimentConfig>& overrides = {});

/// `link_id,rmse_stl,rmse_mtl,improvement_pct`
void write_table_csv(std::ostream& out, std::span<const TableRow> rows);

/// Links as columns with STL, MTL and e rows, for terminals.
void write_table_text(std::ostream& out, std::span<const TableRow> rows);

/// key=value lines; byte-identical for identical inputs.
void write_report(std::ostream& out, const EvaluationReport& report);

/// `anchor,actual,predicted` CSV.
void write_trace(std::ostream& out, const PredictionTrace& trace);
PredictionTrace read_trace(std::istream& in);
void export_trace(const PredictionTrace& trace, const std::filesystem::path& path);
PredictionTrace load_trace(const std::filesystem::path& path);

}  // namespace mtlflow
