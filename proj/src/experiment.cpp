#include "mtlflow/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <thread>

#include "mtlflow/error.hpp"
#include "mtlflow/text_format.hpp"

namespace mtlflow {

void ExperimentConfig::validate() const {
  if (window_len < 1) throw InvalidArgument("window_len must be >= 1");
  if (hidden < 1) throw InvalidArgument("hidden must be >= 1");
  if (train_count < 1) throw InvalidArgument("train_count must be >= 1");
  lm.validate();
}

void PredictionTrace::validate() const {
  if (actual.size() != anchors.size() || predicted.size() != anchors.size())
    throw InvalidArgument("trace columns have different lengths");
  for (std::size_t i = 1; i < anchors.size(); ++i)
    if (anchors[i] <= anchors[i - 1])
      throw InvalidArgument("trace anchors must be strictly increasing");
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw InvalidArgument("rmse: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                          std::to_string(actual.size()) + ")");
  if (predicted.empty()) throw InvalidArgument("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

double improvement(double rmse_stl, double rmse_mtl) {
  if (!(rmse_stl > 0.0)) throw InvalidArgument("improvement: rmse_stl must be > 0");
  return 100.0 * (rmse_stl - rmse_mtl) / rmse_stl;
}

PredictionTrace forecast_main_task(const MlpParams& params, const TaskLayout& layout,
                                   std::span<const double> raw_series,
                                   const NormalizationParams& normalizer, AnchorRange range) {
  if (params.dims().output != layout.output_count() || params.dims().input != layout.window_len())
    throw InvalidArgument("forecast: network does not match the task layout");
  const std::vector<double> scaled = normalize(raw_series, normalizer);
  const WindowedDataset ds = make_windows(scaled, layout, range);
  PredictionTrace trace;
  trace.anchors = ds.anchors;
  trace.actual.reserve(ds.sample_count());
  trace.predicted.reserve(ds.sample_count());
  for (std::size_t i = 0; i < ds.sample_count(); ++i) {
    const ForwardResult r = forward(params, ds.inputs.row(i));
    trace.predicted.push_back(denormalize(r.output[layout.main_task_index()], normalizer));
    trace.actual.push_back(raw_series[ds.anchors[i]]);
  }
  return trace;
}

ComparisonResult run_comparison(const TimeSeries& series, const ExperimentConfig& cfg) {
  cfg.validate();
  series.validate();
  const SeriesSplit split = split_series(series, cfg.train_count);
  const NormalizationParams normalizer = fit_normalizer(split.train);
  const std::vector<double> scaled = normalize(series.values, normalizer);

  const TaskLayout stl = TaskLayout::stl(cfg.window_len);
  const TaskLayout mtl = TaskLayout::mtl(cfg.window_len);
  // Both arms use the anchors admissible for the wider MTL target span, so
  // they train and are scored on exactly the same samples.
  const AnchorRange train_range = train_anchors(cfg.train_count, mtl);
  const AnchorRange test_range = test_anchors(series.size(), cfg.train_count, mtl);

  ComparisonResult out;
  EvaluationReport& rep = out.report;
  rep.link_id = series.link_id;
  rep.seed = cfg.lm.seed;
  rep.normalizer = normalizer;
  rep.config = cfg;
  rep.train_samples = train_range.size();
  rep.test_count = test_range.size();

  auto run_arm = [&](const TaskLayout& layout, ArmSummary& summary) {
    const WindowedDataset train_set = make_windows(scaled, layout, train_range);
    const NetworkDims dims{cfg.window_len, cfg.hidden, layout.output_count()};
    const TrainResult trained = train(train_set, cfg.lm, dims);
    summary = {trained.reason, trained.state.epoch, trained.state.mse};
    return forecast_main_task(trained.params, layout, series.values, normalizer, test_range);
  };
  out.stl_trace = run_arm(stl, rep.stl);
  out.mtl_trace = run_arm(mtl, rep.mtl);

  rep.rmse_stl = rmse(out.stl_trace.predicted, out.stl_trace.actual);
  rep.rmse_mtl = rmse(out.mtl_trace.predicted, out.mtl_trace.actual);
  rep.improvement_pct = improvement(rep.rmse_stl, rep.rmse_mtl);
  return out;
}

std::vector<ComparisonResult> run_seeds(const TimeSeries& series, const ExperimentConfig& cfg,
                                        std::span<const std::uint64_t> seeds,
                                        unsigned max_threads) {
  std::vector<ComparisonResult> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        ExperimentConfig c = cfg;
        c.lm.seed = seeds[i];
        results[i] = run_comparison(series, c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  unsigned threads = max_threads != 0 ? max_threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(seeds.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

TableRow to_row(const EvaluationReport& report) {
  return {report.link_id, report.rmse_stl, report.rmse_mtl, report.improvement_pct};
}

std::vector<TableRow> run_table(std::span<const TimeSeries> series, const ExperimentConfig& base,
                                const std::map<std::string, ExperimentConfig>& overrides) {
  if (series.empty()) throw InvalidArgument("run_table: no series");
  std::vector<TableRow> rows;
  rows.reserve(series.size());
  for (const auto& s : series) {
    const auto it = overrides.find(s.link_id);
    const ExperimentConfig& cfg = it == overrides.end() ? base : it->second;
    rows.push_back(to_row(run_comparison(s, cfg).report));
  }
  return rows;
}

void write_table_csv(std::ostream& out, std::span<const TableRow> rows) {
  out << "link_id,rmse_stl,rmse_mtl,improvement_pct\n";
  for (const auto& r : rows)
    out << r.link_id << ',' << format_double(r.rmse_stl) << ',' << format_double(r.rmse_mtl)
        << ',' << format_double(r.improvement_pct) << '\n';
}

void write_table_text(std::ostream& out, std::span<const TableRow> rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.link_id.size() + 2);
  auto line = [&](const std::string& label, auto cell) {
    out << std::left << std::setw(6) << label;
    for (const auto& r : rows) out << std::right << std::setw(static_cast<int>(width)) << cell(r);
    out << '\n';
  };
  line("RMSE", [](const TableRow& r) { return r.link_id; });
  line("STL", [](const TableRow& r) { return format_fixed(r.rmse_stl, 2); });
  line("MTL", [](const TableRow& r) { return format_fixed(r.rmse_mtl, 2); });
  line("e", [](const TableRow& r) { return format_fixed(r.improvement_pct, 2) + "%"; });
}

void write_report(std::ostream& out, const EvaluationReport& r) {
  const auto& c = r.config;
  out << "link_id=" << r.link_id << '\n'
      << "seed=" << r.seed << '\n'
      << "window_len=" << c.window_len << '\n'
      << "hidden=" << c.hidden << '\n'
      << "train_count=" << c.train_count << '\n'
      << "mu_init=" << format_double(c.lm.mu_init) << '\n'
      << "mu_inc=" << format_double(c.lm.mu_inc) << '\n'
      << "mu_dec=" << format_double(c.lm.mu_dec) << '\n'
      << "mu_max=" << format_double(c.lm.mu_max) << '\n'
      << "max_epochs=" << c.lm.max_epochs << '\n'
      << "error_goal=" << format_double(c.lm.error_goal) << '\n'
      << "normalizer_min=" << format_double(r.normalizer.min_val) << '\n'
      << "normalizer_max=" << format_double(r.normalizer.max_val) << '\n'
      << "train_samples=" << r.train_samples << '\n'
      << "test_count=" << r.test_count << '\n'
      << "stl_stop_reason=" << to_string(r.stl.reason) << '\n'
      << "stl_epochs=" << r.stl.epochs << '\n'
      << "stl_train_mse=" << format_double(r.stl.train_mse) << '\n'
      << "mtl_stop_reason=" << to_string(r.mtl.reason) << '\n'
      << "mtl_epochs=" << r.mtl.epochs << '\n'
      << "mtl_train_mse=" << format_double(r.mtl.train_mse) << '\n'
      << "rmse_stl=" << format_double(r.rmse_stl) << '\n'
      << "rmse_mtl=" << format_double(r.rmse_mtl) << '\n'
      << "improvement_pct=" << format_double(r.improvement_pct) << '\n';
}

void write_trace(std::ostream& out, const PredictionTrace& trace) {
  trace.validate();
  out << "anchor,actual,predicted\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << trace.anchors[i] << ',' << format_double(trace.actual[i]) << ','
        << format_double(trace.predicted[i]) << '\n';
}

PredictionTrace read_trace(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  ++line_no;
  if (trim(line) != "anchor,actual,predicted")
    throw ParseError(1, "expected header 'anchor,actual,predicted'");
  PredictionTrace trace;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    std::size_t anchor = 0;
    double actual = 0.0;
    double predicted = 0.0;
    if (f.size() != 3 || !parse_size(f[0], anchor) || !parse_double(f[1], actual) ||
        !parse_double(f[2], predicted))
      throw ParseError(line_no, "malformed trace row");
    trace.anchors.push_back(anchor);
    trace.actual.push_back(actual);
    trace.predicted.push_back(predicted);
  }
  try {
    trace.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(0, e.what());
  }
  return trace;
}

void export_trace(const PredictionTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_trace(out, trace);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

PredictionTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_trace(in);
}

}  // namespace mtlflow
