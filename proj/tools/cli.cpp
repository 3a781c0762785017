#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "mtlflow/config.hpp"
#include "mtlflow/data.hpp"
#include "mtlflow/error.hpp"
#include "mtlflow/experiment.hpp"
#include "mtlflow/network.hpp"
#include "mtlflow/synthgen.hpp"
#include "mtlflow/text_format.hpp"
#include "mtlflow/trainer.hpp"

namespace fs = std::filesystem;

namespace mtlflow::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::string mode = "mtl";
  std::string model;
  std::string link;
  std::string seeds;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

class Console {
 public:
  Console(std::ostream& out, bool quiet) : out_(out), quiet_(quiet) {}

  template <typename... Args>
  void line(const Args&... args) {
    if (quiet_) return;
    (out_ << ... << args) << '\n';
  }

  std::ostream* stream() { return quiet_ ? nullptr : &out_; }

 private:
  std::ostream& out_;
  bool quiet_;
};

RunConfig resolve_config(const Options& opts) {
  std::string path = opts.config;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;

  RunConfig cfg;
  if (!path.empty()) {
    try {
      cfg = load_config(path);
    } catch (const Error& e) {
      throw UsageError(std::string("bad config: ") + e.what());
    }
  }
  if (opts.seed) {
    cfg.defaults.experiment.lm.seed = *opts.seed;
    for (auto& [_, s] : cfg.per_link) s.experiment.lm.seed = *opts.seed;
  }
  return cfg;
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  if (dots == std::string::npos || !parse_u64(std::string_view(text).substr(0, dots), first) ||
      !parse_u64(std::string_view(text).substr(dots + 2), last) || last < first)
    throw UsageError("--seeds expects A..B with A <= B, got '" + text + "'");
  if (last - first >= 10000) throw UsageError("--seeds range is too large");
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = first; s <= last; ++s) seeds.push_back(s);
  return seeds;
}

const TimeSeries& pick_series(const std::vector<TimeSeries>& all, const std::string& link) {
  if (link.empty()) return all.front();
  for (const auto& s : all)
    if (s.link_id == link) return s;
  throw UsageError("link '" + link + "' is not in the data file");
}

TaskLayout layout_for(const std::string& mode, std::size_t window_len) {
  if (mode == "stl") return TaskLayout::stl(window_len);
  if (mode == "mtl") return TaskLayout::mtl(window_len);
  throw UsageError("--mode must be stl or mtl");
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  writer(f);
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

int cmd_gen(const Options& opts, Console& con) {
  const RunConfig cfg = resolve_config(opts);
  std::vector<TimeSeries> series;
  for (std::size_t i = 0; i < cfg.link_ids.size(); ++i)
    series.push_back(generate(cfg.synth_for(i), cfg.link_ids[i]));
  save_csv(opts.out, series);
  for (const auto& s : series) con.line("generated link_id=", s.link_id, " length=", s.size());
  return kExitOk;
}

int cmd_train(const Options& opts, Console& con) {
  const RunConfig cfg = resolve_config(opts);
  const auto all = load_csv(opts.data);
  const TimeSeries& series = pick_series(all, opts.link);
  const ExperimentConfig& exp = cfg.for_link(series.link_id).experiment;
  const TaskLayout layout = layout_for(opts.mode, exp.window_len);

  const SeriesSplit split = split_series(series, exp.train_count);
  const NormalizationParams norm = fit_normalizer(split.train);
  const std::vector<double> scaled = normalize(series.values, norm);
  const WindowedDataset train_set =
      make_windows(scaled, layout, train_anchors(exp.train_count, layout));
  const NetworkDims dims{exp.window_len, exp.hidden, layout.output_count()};
  const TrainResult result = train(train_set, exp.lm, dims);

  const fs::path model_path = opts.out;
  fs::path history_path = model_path;
  history_path.replace_extension(".history.csv");
  save_model(model_path, result.params);
  write_file(history_path, [&](std::ostream& f) { write_history_csv(f, result.state.history); });

  con.line("link_id=", series.link_id, " mode=", opts.mode, " dims=", dims.input, "-",
           dims.hidden, "-", dims.output);
  con.line("stop_reason=", to_string(result.reason), " epochs=", result.state.epoch,
           " mse=", format_double(result.state.mse));
  con.line("model=", model_path.string(), " history=", history_path.string());
  return kExitOk;
}

void write_comparison(const ComparisonResult& r, const fs::path& dir, const std::string& suffix) {
  write_file(dir / ("report" + suffix + ".txt"),
             [&](std::ostream& f) { write_report(f, r.report); });
  write_file(dir / ("trace_stl" + suffix + ".csv"),
             [&](std::ostream& f) { write_trace(f, r.stl_trace); });
  write_file(dir / ("trace_mtl" + suffix + ".csv"),
             [&](std::ostream& f) { write_trace(f, r.mtl_trace); });
}

int cmd_compare(const Options& opts, Console& con) {
  const RunConfig cfg = resolve_config(opts);
  std::vector<std::uint64_t> seeds;
  if (!opts.seeds.empty()) {
    if (opts.seed) throw UsageError("--seed and --seeds are mutually exclusive");
    seeds = parse_seed_range(opts.seeds);
  }
  const auto all = load_csv(opts.data);
  const TimeSeries& series = pick_series(all, opts.link);
  const ExperimentConfig& exp = cfg.for_link(series.link_id).experiment;

  const fs::path dir = opts.out;
  fs::create_directories(dir);

  if (seeds.empty()) {
    const ComparisonResult r = run_comparison(series, exp);
    write_comparison(r, dir, "");
    const TableRow row = to_row(r.report);
    if (auto* os = con.stream()) write_table_text(*os, std::span(&row, 1));
    return kExitOk;
  }

  const auto results = run_seeds(series, exp, seeds);
  std::vector<double> gains;
  std::vector<TableRow> rows;
  for (const auto& r : results) {
    write_comparison(r, dir, "_seed" + std::to_string(r.report.seed));
    gains.push_back(r.report.improvement_pct);
    TableRow row = to_row(r.report);
    row.link_id += "/s" + std::to_string(r.report.seed);
    rows.push_back(row);
  }
  write_file(dir / "seeds.csv", [&](std::ostream& f) {
    f << "seed,rmse_stl,rmse_mtl,improvement_pct\n";
    for (const auto& r : results)
      f << r.report.seed << ',' << format_double(r.report.rmse_stl) << ','
        << format_double(r.report.rmse_mtl) << ',' << format_double(r.report.improvement_pct)
        << '\n';
  });
  if (auto* os = con.stream()) write_table_text(*os, rows);
  con.line("median_improvement_pct=", format_double(median(gains)));
  return kExitOk;
}

int cmd_table(const Options& opts, Console& con) {
  const RunConfig cfg = resolve_config(opts);
  const auto all = load_csv(opts.data);
  const auto rows = run_table(all, cfg.defaults.experiment, cfg.experiment_overrides());
  write_file(opts.out, [&](std::ostream& f) { write_table_csv(f, rows); });
  if (auto* os = con.stream()) write_table_text(*os, rows);
  return kExitOk;
}

int cmd_export(const Options& opts, Console& con) {
  const RunConfig cfg = resolve_config(opts);
  const auto all = load_csv(opts.data);
  const TimeSeries& series = pick_series(all, opts.link);
  const ExperimentConfig& exp = cfg.for_link(series.link_id).experiment;
  const MlpParams model = load_model(opts.model);

  const NetworkDims d = model.dims();
  std::string mode;
  if (d.output == 1)
    mode = "stl";
  else if (d.output == 3)
    mode = "mtl";
  else
    throw Error("model has " + std::to_string(d.output) + " outputs; expected 1 (stl) or 3 (mtl)");

  const SeriesSplit split = split_series(series, exp.train_count);
  const NormalizationParams norm = fit_normalizer(split.train);
  // Score on the anchors shared by both layouts so STL and MTL traces align.
  const AnchorRange range =
      test_anchors(series.size(), exp.train_count, TaskLayout::mtl(d.input));
  const PredictionTrace trace =
      forecast_main_task(model, layout_for(mode, d.input), series.values, norm, range);
  export_trace(trace, opts.out);
  con.line("link_id=", series.link_id, " mode=", mode, " anchors=", trace.size(),
           " rmse=", format_double(rmse(trace.predicted, trace.actual)));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multitask-learning traffic flow forecasting with Levenberg-Marquardt", "mtlflow"};
  app.require_subcommand(1);
  Options opts;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config,
                    std::string("key=value config file (default: $") + kConfigEnvVar + ")");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
  };
  auto add_data = [&](CLI::App* sub, bool one_link = true) {
    sub->add_option("--data", opts.data, "flow CSV (link_id,index,value)")->required();
    if (one_link) sub->add_option("--link", opts.link, "link to use (default: first in file)");
  };

  auto* gen = app.add_subcommand("gen", "write a synthetic flow series CSV");
  add_config(gen);
  gen->add_option("--out", opts.out, "output CSV path")->required();

  auto* train_cmd = app.add_subcommand("train", "train one arm and save the model");
  add_config(train_cmd);
  add_data(train_cmd);
  train_cmd->add_option("--mode", opts.mode, "stl or mtl")
      ->check(CLI::IsMember({"stl", "mtl"}))
      ->capture_default_str();
  train_cmd->add_option("--out", opts.out, "model output path")->required();
  train_cmd->add_option("--seed", opts.seed, "trainer seed override");

  auto* compare = app.add_subcommand("compare", "train STL and MTL and compare test RMSE");
  add_config(compare);
  add_data(compare);
  compare->add_option("--out", opts.out, "output directory")->required();
  compare->add_option("--seed", opts.seed, "trainer seed override");
  compare->add_option("--seeds", opts.seeds, "seed range A..B, one comparison per seed");

  auto* table = app.add_subcommand("table", "compare every link in the data file");
  add_config(table);
  add_data(table, false);
  table->add_option("--out", opts.out, "output CSV path")->required();
  table->add_option("--seed", opts.seed, "trainer seed override");

  auto* exp = app.add_subcommand("export", "write the test-horizon forecast trace of a model");
  add_config(exp);
  add_data(exp);
  exp->add_option("--model", opts.model, "model file written by train")->required();
  exp->add_option("--out", opts.out, "trace CSV path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  Console con(out, opts.quiet);
  try {
    if (gen->parsed()) return cmd_gen(opts, con);
    if (train_cmd->parsed()) return cmd_train(opts, con);
    if (compare->parsed()) return cmd_compare(opts, con);
    if (table->parsed()) return cmd_table(opts, con);
    if (exp->parsed()) return cmd_export(opts, con);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mtlflow::cli
