#include "cdcnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "cdcnn/error.hpp"
#include "cdcnn/format.hpp"

namespace fs = std::filesystem;

namespace cdcnn {

std::vector<std::string> default_channel_names() {
  std::vector<std::string> names;
  for (int i = 0; i < 18; ++i) names.push_back("pressure_" + std::to_string(i));
  for (const char* axis : {"x", "y", "z"}) names.push_back(std::string("accel_") + axis);
  for (const char* axis : {"x", "y", "z"}) names.push_back(std::string("gyro_") + axis);
  return names;
}

std::vector<std::string> default_label_names() {
  return {"Sitting", "Standing", "Tandem", "Walking"};
}

std::string channel_group(const std::string& channel_name) {
  for (const char* group : {"pressure", "accel", "gyro"}) {
    if (channel_name.rfind(group, 0) == 0) return group;
  }
  return "other";
}

Dataset::Dataset(DatasetMeta meta) : meta_(std::move(meta)) {
  if (meta_.time_steps == 0 || meta_.channels == 0) {
    throw DataError("dataset: time_steps and channels must be positive");
  }
  if (meta_.channel_names.size() != meta_.channels) {
    throw DataError("dataset: " + std::to_string(meta_.channel_names.size()) +
                    " channel names for " + std::to_string(meta_.channels) + " channels");
  }
  if (meta_.label_names.size() < 2) throw DataError("dataset: at least two label names required");
  std::set<std::string> seen(meta_.label_names.begin(), meta_.label_names.end());
  if (seen.size() != meta_.label_names.size()) throw DataError("dataset: duplicate label names");
}

void Dataset::add(const WindowInfo& info, std::span<const float> values) {
  if (values.size() != window_size()) {
    throw DataError("dataset: window " + std::to_string(info.sample_id) + " has " +
                    std::to_string(values.size()) + " values, expected " +
                    std::to_string(window_size()));
  }
  if (info.label < 0 || static_cast<std::size_t>(info.label) >= num_classes()) {
    throw DataError("dataset: label " + std::to_string(info.label) + " out of range for sample " +
                    std::to_string(info.sample_id));
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw DataError("dataset: non-finite value in sample " + std::to_string(info.sample_id));
    }
  }
  if (!sample_ids_.insert(info.sample_id).second) {
    throw DataError("dataset: duplicate sample_id " + std::to_string(info.sample_id));
  }
  info_.push_back(info);
  values_.insert(values_.end(), values.begin(), values.end());
}

std::span<const float> Dataset::values(std::size_t i) const {
  return std::span<const float>(values_).subspan(i * window_size(), window_size());
}

std::span<float> Dataset::mutable_values(std::size_t i) {
  return std::span<float>(values_).subspan(i * window_size(), window_size());
}

SensorWindow Dataset::window(std::size_t i) const {
  auto v = values(i);
  return {Tensor({time_steps(), channels()}, std::vector<float>(v.begin(), v.end())), info_.at(i)};
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(info_.size());
  for (const auto& w : info_) out.push_back(w.label);
  return out;
}

std::set<int> Dataset::subjects() const {
  std::set<int> out;
  for (const auto& w : info_) out.insert(w.subject_id);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(meta_);
  out.info_.reserve(indices.size());
  out.values_.reserve(indices.size() * window_size());
  for (auto i : indices) {
    const auto& w = info_.at(i);
    if (!out.sample_ids_.insert(w.sample_id).second) {
      throw DataError("dataset subset: sample " + std::to_string(w.sample_id) + " selected twice");
    }
    out.info_.push_back(w);
    auto v = values(i);
    out.values_.insert(out.values_.end(), v.begin(), v.end());
  }
  return out;
}

// ----------------------------------------------------------------------------
// On-disk format

namespace {

nlohmann::json parse_json_file(const fs::path& file) {
  if (!fs::exists(file)) throw DataError("missing file: " + file.string());
  try {
    return nlohmann::json::parse(read_text_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse " + file.string() + ": " + e.what());
  }
}

DatasetMeta meta_from_json(const nlohmann::json& j, const fs::path& file, std::size_t& num_samples) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw DataError(file.string() + ": unsupported dataset version " + std::to_string(version));
    }
    DatasetMeta meta;
    num_samples = j.at("num_samples").get<std::size_t>();
    meta.time_steps = j.at("time_steps").get<std::size_t>();
    meta.channels = j.at("channels").get<std::size_t>();
    meta.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    meta.label_names = j.at("label_names").get<std::vector<std::string>>();
    meta.units = j.value("units", nlohmann::json::object());
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + file.string() + ": " + e.what());
  }
}

template <typename Int>
Int parse_int(std::string_view field, const fs::path& file, std::size_t line) {
  Int v{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": expected integer, got '" +
                    std::string(field) + "'");
  }
  return v;
}

std::vector<WindowInfo> read_labels(const fs::path& file, const std::vector<std::string>& label_names) {
  if (!fs::exists(file)) throw DataError("missing file: " + file.string());
  std::map<std::string, int> label_index;
  for (std::size_t i = 0; i < label_names.size(); ++i) label_index[label_names[i]] = static_cast<int>(i);

  std::istringstream in(read_text_file(file));
  std::string line;
  std::size_t line_no = 0;
  std::vector<WindowInfo> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "sample_id,subject_id,label") {
        throw DataError(file.string() + ": header must be 'sample_id,subject_id,label'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::string_view view(line);
    WindowInfo w;
    w.sample_id = parse_int<std::int64_t>(view.substr(0, c1), file, line_no);
    w.subject_id = parse_int<int>(view.substr(c1 + 1, c2 - c1 - 1), file, line_no);
    const std::string name(view.substr(c2 + 1));
    auto it = label_index.find(name);
    if (it == label_index.end()) {
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": unknown label '" + name + "'");
    }
    w.label = it->second;
    rows.push_back(w);
  }
  if (line_no == 0) throw DataError(file.string() + ": missing header");
  return rows;
}

}  // namespace

nlohmann::json meta_to_json(const DatasetMeta& meta, std::size_t num_samples) {
  return nlohmann::json{{"version", kDatasetFormatVersion},
                        {"num_samples", num_samples},
                        {"time_steps", meta.time_steps},
                        {"channels", meta.channels},
                        {"channel_names", meta.channel_names},
                        {"label_names", meta.label_names},
                        {"units", meta.units}};
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path meta_file = dir / "meta.json";
  const fs::path windows_file = dir / "windows.f32";
  const fs::path labels_file = dir / "labels.csv";

  std::size_t declared = 0;
  DatasetMeta meta = meta_from_json(parse_json_file(meta_file), meta_file, declared);
  Dataset ds(meta);
  const auto rows = read_labels(labels_file, meta.label_names);
  if (rows.size() != declared) {
    throw DataError(labels_file.string() + ": " + std::to_string(rows.size()) +
                    " rows but meta.json declares num_samples=" + std::to_string(declared));
  }

  if (!fs::exists(windows_file)) throw DataError("missing file: " + windows_file.string());
  const auto bytes = read_binary_file(windows_file);
  const std::size_t expected = rows.size() * ds.window_size() * 4;
  if (bytes.size() != expected) {
    throw DataError(windows_file.string() + ": byte count mismatch, expected " +
                    std::to_string(expected) + " bytes (" + std::to_string(rows.size()) + " x " +
                    std::to_string(meta.time_steps) + " x " + std::to_string(meta.channels) +
                    " x 4), got " + std::to_string(bytes.size()));
  }
  std::vector<float> window(ds.window_size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::read_f32_le(bytes.data() + i * window.size() * 4, window);
    ds.add(rows[i], window);
  }
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_text_file(dir / "meta.json", meta_to_json(ds.meta(), ds.size()).dump(2) + "\n");

  std::string csv = "sample_id,subject_id,label\n";
  for (const auto& w : ds.infos()) {
    csv += std::to_string(w.sample_id) + "," + std::to_string(w.subject_id) + "," +
           ds.meta().label_names[static_cast<std::size_t>(w.label)] + "\n";
  }
  write_text_file(dir / "labels.csv", csv);

  std::vector<std::uint8_t> payload;
  payload.reserve(ds.all_values().size() * 4);
  detail::append_f32_le(payload, ds.all_values());
  write_binary_file(dir / "windows.f32", payload);
}

// ----------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  std::map<int, const char*> owner;
  for (auto [name, ids] : {std::pair{"train", &train}, std::pair{"val", &val}, std::pair{"test", &test}}) {
    for (int s : *ids) {
      auto [it, inserted] = owner.emplace(s, name);
      if (!inserted) {
        throw DataError("split spec: subject " + std::to_string(s) + " assigned to both " +
                        it->second + " and " + name);
      }
    }
  }
}

void to_json(nlohmann::json& j, const SplitSpec& s) {
  j = nlohmann::json{{"train", s.train}, {"val", s.val}, {"test", s.test}};
}

void from_json(const nlohmann::json& j, SplitSpec& s) {
  j.at("train").get_to(s.train);
  j.at("val").get_to(s.val);
  j.at("test").get_to(s.test);
}

SplitSpec load_split_spec(const fs::path& file) {
  const auto j = parse_json_file(file);
  try {
    auto spec = j.get<SplitSpec>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed split spec " + file.string() + ": " + e.what());
  }
}

Splits split_by_subject(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  std::map<int, int> owner;
  for (int s : spec.train) owner[s] = 0;
  for (int s : spec.val) owner[s] = 1;
  for (int s : spec.test) owner[s] = 2;

  std::vector<std::size_t> idx[3];
  std::set<int> uncovered;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = owner.find(ds.info(i).subject_id);
    if (it == owner.end()) {
      uncovered.insert(ds.info(i).subject_id);
      continue;
    }
    idx[it->second].push_back(i);
  }
  if (!uncovered.empty()) {
    std::string list;
    for (int s : uncovered) list += (list.empty() ? "" : ", ") + std::to_string(s);
    throw DataError("split spec does not assign subject(s) " + list);
  }
  Splits out{ds.subset(idx[0]), ds.subset(idx[1]), ds.subset(idx[2])};

  // Hard disjointness check on the materialized splits.
  const auto a = out.train.subjects(), b = out.val.subjects(), c = out.test.subjects();
  for (int s : a) {
    if (b.count(s) || c.count(s)) throw DataError("split: subject " + std::to_string(s) + " leaked");
  }
  for (int s : b) {
    if (c.count(s)) throw DataError("split: subject " + std::to_string(s) + " leaked");
  }
  return out;
}

// ----------------------------------------------------------------------------
// Normalization

Normalizer Normalizer::identity(std::size_t channels) {
  return {false, std::vector<float>(channels, 0.0f), std::vector<float>(channels, 1.0f)};
}

Normalizer fit_normalizer(const Dataset& train) {
  if (train.empty()) throw DataError("cannot fit normalizer on an empty training split");
  const std::size_t channels = train.channels();
  const auto values = train.all_values();
  const std::size_t rows = values.size() / channels;

  std::vector<double> sum(channels, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) sum[c] += values[r * channels + c];
  }
  std::vector<double> mean(channels);
  for (std::size_t c = 0; c < channels; ++c) mean[c] = sum[c] / static_cast<double>(rows);
  std::vector<double> sq(channels, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = values[r * channels + c] - mean[c];
      sq[c] += d * d;
    }
  }

  Normalizer norm;
  norm.enabled = true;
  for (std::size_t c = 0; c < channels; ++c) {
    const double sd = std::sqrt(sq[c] / static_cast<double>(rows));
    norm.mean.push_back(static_cast<float>(mean[c]));
    norm.stddev.push_back(sd > 1e-8 ? static_cast<float>(sd) : 1.0f);
  }
  return norm;
}

void apply_normalizer(Dataset& ds, const Normalizer& norm) {
  const std::size_t channels = ds.channels();
  if (norm.mean.size() != channels || norm.stddev.size() != channels) {
    throw DataError("normalizer has " + std::to_string(norm.mean.size()) + " channels, dataset has " +
                    std::to_string(channels));
  }
  if (!norm.enabled) return;
  auto values = ds.all_values();
  const std::size_t rows = values.size() / channels;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      float& v = values[r * channels + c];
      v = (v - norm.mean[c]) / norm.stddev[c];
    }
  }
}

// ----------------------------------------------------------------------------
// Statistics

SubjectClassTable subject_class_table(const Dataset& ds) {
  SubjectClassTable t;
  t.label_names = ds.meta().label_names;
  const std::size_t k = t.label_names.size();
  t.column_totals.assign(k, 0);
  std::map<int, std::vector<std::size_t>> rows;
  for (const auto& w : ds.infos()) {
    auto& row = rows[w.subject_id];
    if (row.empty()) row.assign(k, 0);
    ++row[static_cast<std::size_t>(w.label)];
  }
  for (auto& [subject, row] : rows) {
    t.subjects.push_back(subject);
    std::size_t total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      total += row[j];
      t.column_totals[j] += row[j];
    }
    t.row_totals.push_back(total);
    t.counts.push_back(std::move(row));
    t.total += total;
  }
  return t;
}

std::string format_table(const SubjectClassTable& table) {
  std::ostringstream out;
  auto cell = [&](const std::string& s, std::size_t width) {
    out << std::string(width > s.size() ? width - s.size() : 0, ' ') << s;
  };
  std::size_t width = 8;
  for (const auto& n : table.label_names) width = std::max(width, n.size() + 2);
  cell("subject", 8);
  for (const auto& n : table.label_names) cell(n, width);
  cell("Total", width);
  out << "\n";
  for (std::size_t r = 0; r < table.subjects.size(); ++r) {
    cell(std::to_string(table.subjects[r]), 8);
    for (auto v : table.counts[r]) cell(std::to_string(v), width);
    cell(std::to_string(table.row_totals[r]), width);
    out << "\n";
  }
  cell("Total", 8);
  for (auto v : table.column_totals) cell(std::to_string(v), width);
  cell(std::to_string(table.total), width);
  out << "\n";
  return out.str();
}

// ----------------------------------------------------------------------------
// Batching

Tensor channels_first_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t len = ds.time_steps();
  const std::size_t channels = ds.channels();
  Tensor x({indices.size(), channels, len});
  auto out = x.data();
  for (std::size_t n = 0; n < indices.size(); ++n) {
    auto w = ds.values(indices[n]);
    float* dst = out.data() + n * channels * len;
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t c = 0; c < channels; ++c) dst[c * len + t] = w[t * channels + c];
    }
  }
  return x;
}

Tensor flat_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t d = ds.window_size();
  Tensor x({indices.size(), d});
  for (std::size_t n = 0; n < indices.size(); ++n) {
    auto w = ds.values(indices[n]);
    std::copy(w.begin(), w.end(), x.data().begin() + static_cast<std::ptrdiff_t>(n * d));
  }
  return x;
}

std::vector<std::size_t> all_indices(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace cdcnn
