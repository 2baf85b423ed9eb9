#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <random>

#include "cdcnn/format.hpp"
#include "cdcnn/rng.hpp"

namespace fs = std::filesystem;

namespace cdcnn::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

const std::vector<SubjectCounts>& insole_subject_counts() {
  //                 subject  Sitting Standing Tandem Walking
  static const std::vector<SubjectCounts> rows = {
      {1, {0, 404, 0, 426}},       {10, {0, 392, 0, 412}},      {12, {0, 430, 0, 358}},
      {13, {0, 358, 0, 360}},      {14, {396, 396, 0, 147}},    {15, {566, 398, 590, 406}},
      {16, {548, 368, 215, 370}},  {17, {504, 153, 564, 418}},  {18, {342, 0, 0, 0}},
      {19, {592, 388, 594, 240}},  {22, {408, 390, 510, 386}},  {23, {330, 372, 546, 368}},
      {24, {230, 360, 514, 366}},  {30, {384, 382, 550, 410}},  {31, {442, 372, 420, 406}},
      {32, {324, 396, 540, 328}},
  };
  return rows;
}

Dataset insole_count_fixture(std::size_t time_steps) {
  DatasetMeta meta;
  meta.time_steps = time_steps;
  Dataset ds(meta);
  std::vector<float> zeros(ds.window_size(), 0.0f);
  std::int64_t id = 0;
  for (const auto& row : insole_subject_counts()) {
    for (int cls = 0; cls < 4; ++cls) {
      for (std::size_t i = 0; i < row.counts[static_cast<std::size_t>(cls)]; ++i) {
        ds.add({id++, row.subject, cls}, zeros);
      }
    }
  }
  return ds;
}

SplitSpec insole_split() {
  return {{1, 10, 12, 14, 15, 18, 19, 23, 30, 31, 32}, {17, 22}, {13, 16, 24}};
}

Dataset label_channel_dataset(std::size_t subjects, std::size_t per_class, std::size_t label_channel,
                              std::size_t time_steps, std::uint64_t seed) {
  DatasetMeta meta;
  meta.time_steps = time_steps;
  Dataset ds(meta);
  Rng rng(seed);
  std::vector<float> w(ds.window_size());
  std::int64_t id = 0;
  for (std::size_t s = 1; s <= subjects; ++s) {
    for (int cls = 0; cls < 4; ++cls) {
      for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t t = 0; t < time_steps; ++t) {
          for (std::size_t c = 0; c < ds.channels(); ++c) {
            float v = rng.normal();
            if (c == label_channel) v = 2.0f * static_cast<float>(cls) - 3.0f + 0.3f * v;
            w[t * ds.channels() + c] = v;
          }
        }
        ds.add({id++, static_cast<int>(s), cls}, w);
      }
    }
  }
  return ds;
}

ModelConfig small_config(std::size_t time_steps, std::size_t hidden) {
  ModelConfig c;
  c.time_steps = time_steps;
  c.hidden = hidden;
  return c;
}

std::vector<std::pair<std::string, std::vector<std::uint8_t>>> snapshot_dir(const fs::path& dir) {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      out.emplace_back(fs::relative(e.path(), dir).string(), read_binary_file(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cdcnn::testing
