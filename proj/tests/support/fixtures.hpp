#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdcnn/dataset.hpp"
#include "cdcnn/model.hpp"

namespace cdcnn::testing {

// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag = "cdcnn");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// Per-subject window counts of the published insole corpus, in label order
// Sitting, Standing, Tandem, Walking.
struct SubjectCounts {
  int subject;
  std::array<std::size_t, 4> counts;
};
const std::vector<SubjectCounts>& insole_subject_counts();

// A dataset with exactly those counts. Window contents are zeros; a short
// `time_steps` keeps the fixture small.
Dataset insole_count_fixture(std::size_t time_steps = 1);

// Published subject assignment: train / val / test.
SplitSpec insole_split();

// Windows of pure noise except channel `label_channel`, whose value at every
// time step is a label-dependent level plus noise.
Dataset label_channel_dataset(std::size_t subjects, std::size_t per_class, std::size_t label_channel,
                              std::size_t time_steps, std::uint64_t seed);

// A small network for fast tests: 24 -> hidden channels, 4 blocks.
ModelConfig small_config(std::size_t time_steps = 32, std::size_t hidden = 8);

// Files under `dir`, each mapped to its bytes.
std::vector<std::pair<std::string, std::vector<std::uint8_t>>> snapshot_dir(const std::filesystem::path& dir);

}  // namespace cdcnn::testing
