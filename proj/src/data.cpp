#include "mtlflow/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "mtlflow/error.hpp"
#include "mtlflow/text_format.hpp"

namespace mtlflow {

void TimeSeries::validate() const {
  if (interval_minutes != kIntervalMinutes)
    throw InvalidArgument("series '" + link_id + "': interval must be 15 minutes");
  if (values.empty()) throw InvalidArgument("series '" + link_id + "' is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0)
      throw InvalidArgument("series '" + link_id + "': value at index " + std::to_string(i) +
                            " is negative or non-finite");
  }
}

std::vector<TimeSeries> read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // Tolerate a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (trim(line) != "link_id,index,value")
    throw ParseError(1, "expected header 'link_id,index,value'");

  std::vector<TimeSeries> out;
  std::unordered_set<std::string> finished;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    const auto fields = split(line, ',');
    if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
    const std::string link(trim(fields[0]));
    if (link.empty()) throw ParseError(line_no, "empty link_id");
    std::size_t index = 0;
    if (!parse_size(fields[1], index)) throw ParseError(line_no, "bad index");
    double value = 0.0;
    if (!parse_double(fields[2], value)) throw ParseError(line_no, "bad value");
    if (value < 0.0) throw ParseError(line_no, "negative flow value");

    if (out.empty() || out.back().link_id != link) {
      if (!out.empty()) finished.insert(out.back().link_id);
      if (finished.count(link))
        throw ParseError(line_no, "rows for link '" + link + "' are not grouped");
      out.push_back(TimeSeries{link, kIntervalMinutes, {}});
    }
    auto& series = out.back();
    if (index != series.values.size())
      throw ParseError(line_no, "index " + std::to_string(index) + " for link '" + link +
                                    "' is not contiguous (expected " +
                                    std::to_string(series.values.size()) + ")");
    series.values.push_back(value);
  }
  if (out.empty()) throw ParseError(line_no, "no data rows");
  return out;
}

std::vector<TimeSeries> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, std::span<const TimeSeries> series) {
  out << "link_id,index,value\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.values.size(); ++i)
      out << s.link_id << ',' << i << ',' << format_double(s.values[i]) << '\n';
}

void save_csv(const std::filesystem::path& path, std::span<const TimeSeries> series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(out, series);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

NormalizationParams fit_normalizer(std::span<const double> training_values) {
  if (training_values.empty()) throw InvalidArgument("fit_normalizer: empty slice");
  const auto [lo, hi] = std::minmax_element(training_values.begin(), training_values.end());
  if (!(*hi > *lo))
    throw DegenerateRangeError("fit_normalizer: constant slice (min = max = " +
                               format_double(*lo) + ")");
  return {*lo, *hi};
}

std::vector<double> normalize(std::span<const double> values, const NormalizationParams& p) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double x) { return normalize(x, p); });
  return out;
}

const char* to_string(TaskMode mode) { return mode == TaskMode::kStl ? "stl" : "mtl"; }

TaskLayout::TaskLayout(TaskMode mode, std::size_t window_len, std::vector<int> offsets)
    : mode_(mode), window_len_(window_len), offsets_(std::move(offsets)), main_index_(0) {
  if (window_len_ < 1) throw InvalidArgument("window length must be >= 1");
  const auto zero = std::find(offsets_.begin(), offsets_.end(), 0);
  if (zero == offsets_.end()) throw InvalidArgument("layout must contain offset 0");
  if (!std::is_sorted(offsets_.begin(), offsets_.end()) ||
      std::adjacent_find(offsets_.begin(), offsets_.end()) != offsets_.end())
    throw InvalidArgument("layout offsets must be strictly increasing");
  // Targets t(n + o) with o < 0 must not reach before the input window.
  if (-offsets_.front() > static_cast<int>(window_len_))
    throw InvalidArgument("layout offset reaches before the input window");
  main_index_ = static_cast<std::size_t>(zero - offsets_.begin());
}

TaskLayout TaskLayout::stl(std::size_t window_len) {
  return TaskLayout(TaskMode::kStl, window_len, {0});
}

TaskLayout TaskLayout::mtl(std::size_t window_len) {
  return TaskLayout(TaskMode::kMtl, window_len, {-1, 0, 1});
}

AnchorRange admissible_anchors(std::size_t series_len, const TaskLayout& layout) {
  const std::size_t lo = layout.window_len();
  const std::size_t reach = static_cast<std::size_t>(std::max(layout.max_offset(), 0));
  const std::size_t hi = series_len > reach ? series_len - reach : 0;
  return {lo, std::max(lo, hi)};
}

AnchorRange train_anchors(std::size_t train_count, const TaskLayout& layout) {
  return admissible_anchors(train_count, layout);
}

AnchorRange test_anchors(std::size_t series_len, std::size_t train_count,
                         const TaskLayout& layout) {
  const AnchorRange all = admissible_anchors(series_len, layout);
  const std::size_t lo = std::max(all.lo, train_count);
  return {lo, std::max(lo, all.hi)};
}

WindowedDataset make_windows(std::span<const double> series, const TaskLayout& layout,
                             AnchorRange range) {
  if (range.size() == 0)
    throw EmptyDatasetError("make_windows: no admissible anchor in [" +
                            std::to_string(range.lo) + ", " + std::to_string(range.hi) + ")");
  const AnchorRange ok = admissible_anchors(series.size(), layout);
  if (range.lo < ok.lo || range.hi > ok.hi)
    throw InvalidArgument("make_windows: anchor range [" + std::to_string(range.lo) + ", " +
                          std::to_string(range.hi) + ") exceeds admissible [" +
                          std::to_string(ok.lo) + ", " + std::to_string(ok.hi) + ")");

  const std::size_t n_samples = range.size();
  const std::size_t m = layout.window_len();
  const auto& offsets = layout.target_offsets();
  WindowedDataset ds{Matrix(n_samples, m), Matrix(n_samples, offsets.size()), {}};
  ds.anchors.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t n = range.lo + i;
    auto in_row = ds.inputs.row(i);
    for (std::size_t q = 0; q < m; ++q) in_row[q] = series[n - m + q];
    auto tgt_row = ds.targets.row(i);
    for (std::size_t j = 0; j < offsets.size(); ++j)
      tgt_row[j] = series[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(n) + offsets[j])];
    ds.anchors.push_back(n);
  }
  return ds;
}

SeriesSplit split_series(const TimeSeries& series, std::size_t train_count) {
  if (train_count == 0 || train_count >= series.size())
    throw InvalidArgument("split_series: train_count " + std::to_string(train_count) +
                          " must lie in (0, " + std::to_string(series.size()) + ")");
  const auto mid = series.values.begin() + static_cast<std::ptrdiff_t>(train_count);
  return {std::vector<double>(series.values.begin(), mid),
          std::vector<double>(mid, series.values.end())};
}

}  // namespace mtlflow
