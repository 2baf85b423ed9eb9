#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdcnn/tensor.hpp"

namespace cdcnn {

inline constexpr std::size_t kWindowSteps = 160;
inline constexpr std::size_t kSensorChannels = 24;
inline constexpr int kDatasetFormatVersion = 1;

// pressure_0..pressure_17, accel_x/y/z, gyro_x/y/z.
std::vector<std::string> default_channel_names();
// Alphabetical: Sitting, Standing, Tandem, Walking.
std::vector<std::string> default_label_names();

// Sensor group of a channel, derived from its name prefix: "pressure",
// "accel", "gyro", or "other".
std::string channel_group(const std::string& channel_name);

struct DatasetMeta {
  std::size_t time_steps = kWindowSteps;
  std::size_t channels = kSensorChannels;
  std::vector<std::string> channel_names = default_channel_names();
  std::vector<std::string> label_names = default_label_names();
  nlohmann::json units = nlohmann::json::object();

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct WindowInfo {
  std::int64_t sample_id = 0;
  int subject_id = 0;
  int label = 0;

  friend bool operator==(const WindowInfo&, const WindowInfo&) = default;
};

// One labelled window; values are (time_steps, channels).
struct SensorWindow {
  Tensor values;
  WindowInfo info;
};

// Ordered windows stored contiguously as [sample][time][channel].
class Dataset {
public:
  Dataset() = default;
  explicit Dataset(DatasetMeta meta);

  const DatasetMeta& meta() const noexcept { return meta_; }
  std::size_t size() const noexcept { return info_.size(); }
  bool empty() const noexcept { return info_.empty(); }
  std::size_t time_steps() const noexcept { return meta_.time_steps; }
  std::size_t channels() const noexcept { return meta_.channels; }
  std::size_t window_size() const noexcept { return meta_.time_steps * meta_.channels; }
  std::size_t num_classes() const noexcept { return meta_.label_names.size(); }

  // Appends a window. Throws DataError on wrong length, bad label, duplicate
  // sample id or non-finite values.
  void add(const WindowInfo& info, std::span<const float> values);

  const WindowInfo& info(std::size_t i) const { return info_.at(i); }
  const std::vector<WindowInfo>& infos() const noexcept { return info_; }
  std::span<const float> values(std::size_t i) const;
  std::span<float> mutable_values(std::size_t i);
  std::span<const float> all_values() const noexcept { return values_; }
  std::span<float> all_values() noexcept { return values_; }
  SensorWindow window(std::size_t i) const;

  std::vector<int> labels() const;
  std::set<int> subjects() const;

  // Windows at `indices`, in that order, with the same metadata.
  Dataset subset(std::span<const std::size_t> indices) const;

private:
  DatasetMeta meta_;
  std::vector<WindowInfo> info_;
  std::vector<float> values_;
  std::set<std::int64_t> sample_ids_;
};

// Reads meta.json, windows.f32 and labels.csv from `dir`. Throws DataError
// (missing file, byte-count mismatch, unknown label, duplicate sample id,
// NaN payload, malformed JSON/CSV naming the file).
Dataset load_dataset(const std::filesystem::path& dir);
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

nlohmann::json meta_to_json(const DatasetMeta& meta, std::size_t num_samples);

// Subject-disjoint assignment of subjects to train / validation / test.
struct SplitSpec {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;

  // Throws DataError if any subject is listed twice.
  void validate() const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

void to_json(nlohmann::json& j, const SplitSpec& s);
void from_json(const nlohmann::json& j, SplitSpec& s);
SplitSpec load_split_spec(const std::filesystem::path& file);

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Each window goes to the split owning its subject; order within a split
// follows the source. Throws DataError on overlapping or uncovered subjects.
Splits split_by_subject(const Dataset& ds, const SplitSpec& spec);

// Per-channel z-score statistics. Constant channels keep stddev = 1.
struct Normalizer {
  bool enabled = true;
  std::vector<float> mean;
  std::vector<float> stddev;

  static Normalizer identity(std::size_t channels);
  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

// Statistics over every (sample, time) entry of `train`. Throws DataError
// when `train` is empty.
Normalizer fit_normalizer(const Dataset& train);
// A disabled normalizer leaves the values alone.
void apply_normalizer(Dataset& ds, const Normalizer& norm);

// Window counts per (subject, class) with row and column totals.
struct SubjectClassTable {
  std::vector<std::string> label_names;
  std::vector<int> subjects;                       // ascending
  std::vector<std::vector<std::size_t>> counts;    // [subject row][class]
  std::vector<std::size_t> row_totals;             // per subject
  std::vector<std::size_t> column_totals;          // per class
  std::size_t total = 0;
};

SubjectClassTable subject_class_table(const Dataset& ds);
std::string format_table(const SubjectClassTable& table);

// Model inputs for the windows at `indices`: (N, C, T) for the convolutional
// network, (N, T * C) flattened in storage order for the linear baseline.
Tensor channels_first_batch(const Dataset& ds, std::span<const std::size_t> indices);
Tensor flat_batch(const Dataset& ds, std::span<const std::size_t> indices);

std::vector<std::size_t> all_indices(const Dataset& ds);

}  // namespace cdcnn
