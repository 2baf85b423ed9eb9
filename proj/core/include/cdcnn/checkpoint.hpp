#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cdcnn/baseline.hpp"
#include "cdcnn/dataset.hpp"
#include "cdcnn/error.hpp"
#include "cdcnn/model.hpp"

// Binary checkpoint layout:
//
//   bytes 0..3   magic "CDCN"
//   byte  4      format version (0x01)
//   bytes 5..8   header length L, uint32 little-endian
//   next L bytes UTF-8 JSON header
//   remainder    raw little-endian binary32 tensor payloads, in directory order
//
// The header carries the model kind and config, channel/label names, the
// input normalizer, the subject split used for training, and a tensor
// directory of {name, shape, offset, nbytes} with offsets relative to the
// start of the payload section.
namespace cdcnn {

inline constexpr std::uint8_t kCheckpointVersion = 0x01;

class CheckpointError : public Error {
public:
  enum class Code { bad_magic, version_mismatch, inconsistent, truncated };

  CheckpointError(Code code, const std::string& what) : Error(ErrorKind::checkpoint, what), code_(code) {}
  Code code() const noexcept { return code_; }

private:
  Code code_;
};

enum class ModelKind { cdcnn, linear_baseline };

const char* to_string(ModelKind kind) noexcept;

struct Checkpoint {
  ModelConfig config;  // for the baseline only the input/class extents matter
  std::vector<std::string> channel_names;
  std::vector<std::string> label_names;
  Normalizer normalizer;
  std::optional<SplitSpec> split;
  std::variant<ModelParams, BaselineParams> params;

  ModelKind kind() const noexcept {
    return std::holds_alternative<ModelParams>(params) ? ModelKind::cdcnn : ModelKind::linear_baseline;
  }
};

std::vector<std::uint8_t> save_checkpoint(const Checkpoint& ckpt);
// Never returns a partially decoded model: any defect throws CheckpointError.
Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

}  // namespace cdcnn
