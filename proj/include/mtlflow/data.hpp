#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mtlflow/linalg.hpp"

namespace mtlflow {

inline constexpr int kIntervalMinutes = 15;

/// One road link's flow record, one value per 15-minute slot, in veh/h.
struct TimeSeries {
  std::string link_id;
  int interval_minutes = kIntervalMinutes;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }

  // Throws InvalidArgument if empty, if any value is negative or non-finite,
  // or if the interval is not 15 minutes.
  void validate() const;
};

/// Reads the `link_id,index,value` CSV schema. Rows must be grouped by link
/// with indices contiguous from 0; link order of first appearance is kept.
/// Throws IoError if the file cannot be opened and ParseError (with line
/// number) for every content problem.
std::vector<TimeSeries> load_csv(const std::filesystem::path& path);
std::vector<TimeSeries> read_csv(std::istream& in);

void write_csv(std::ostream& out, std::span<const TimeSeries> series);
void save_csv(const std::filesystem::path& path, std::span<const TimeSeries> series);

/// Affine map of veh/h onto [-1, 1] fitted on a training slice.
struct NormalizationParams {
  double min_val = 0.0;
  double max_val = 1.0;
};

NormalizationParams fit_normalizer(std::span<const double> training_values);

inline double normalize(double x, const NormalizationParams& p) {
  return 2.0 * (x - p.min_val) / (p.max_val - p.min_val) - 1.0;
}

inline double denormalize(double x, const NormalizationParams& p) {
  return (x + 1.0) * 0.5 * (p.max_val - p.min_val) + p.min_val;
}

std::vector<double> normalize(std::span<const double> values, const NormalizationParams& p);

enum class TaskMode { kStl, kMtl };

const char* to_string(TaskMode mode);

/// Which targets each sample carries. Inputs are always the `window_len`
/// values immediately before the anchor n; targets are t(n + offset) for each
/// offset, in order.
class TaskLayout {
 public:
  static TaskLayout stl(std::size_t window_len = 5);
  static TaskLayout mtl(std::size_t window_len = 5);

  TaskMode mode() const noexcept { return mode_; }
  std::size_t window_len() const noexcept { return window_len_; }
  const std::vector<int>& target_offsets() const noexcept { return offsets_; }
  std::size_t output_count() const noexcept { return offsets_.size(); }
  std::size_t main_task_index() const noexcept { return main_index_; }
  int max_offset() const noexcept { return offsets_.back(); }

 private:
  TaskLayout(TaskMode mode, std::size_t window_len, std::vector<int> offsets);

  TaskMode mode_;
  std::size_t window_len_;
  std::vector<int> offsets_;
  std::size_t main_index_;
};

/// Half-open range [lo, hi) of anchor indices.
struct AnchorRange {
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t size() const noexcept { return hi > lo ? hi - lo : 0; }
  friend bool operator==(const AnchorRange&, const AnchorRange&) = default;
};

struct WindowedDataset {
  Matrix inputs;   // N x window_len
  Matrix targets;  // N x output_count
  std::vector<std::size_t> anchors;

  std::size_t sample_count() const noexcept { return anchors.size(); }
};

/// Every anchor n with n - m >= 0 and n + max_offset < series_len.
AnchorRange admissible_anchors(std::size_t series_len, const TaskLayout& layout);

/// Anchors whose targets all lie inside [0, train_count).
AnchorRange train_anchors(std::size_t train_count, const TaskLayout& layout);

/// Anchors n >= train_count whose targets exist; input windows may reach back
/// into the training slice.
AnchorRange test_anchors(std::size_t series_len, std::size_t train_count,
                         const TaskLayout& layout);

/// Builds one sample per anchor in `range`. Throws EmptyDatasetError for an
/// empty range and InvalidArgument if any anchor's window or targets fall
/// outside the series.
WindowedDataset make_windows(std::span<const double> series, const TaskLayout& layout,
                             AnchorRange range);

struct SeriesSplit {
  std::vector<double> train;
  std::vector<double> test;
};

/// train = [0, train_count), test = [train_count, size). Requires
/// 0 < train_count < size.
SeriesSplit split_series(const TimeSeries& series, std::size_t train_count);

}  // namespace mtlflow
