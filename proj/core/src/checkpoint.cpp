#include "cdcnn/checkpoint.hpp"

#include <algorithm>
#include <cstring>

#include "binary_io.hpp"
#include "cdcnn/format.hpp"

namespace cdcnn {

namespace {

constexpr char kMagic[4] = {'C', 'D', 'C', 'N'};
constexpr std::size_t kPreambleSize = 9;  // magic + version + header length

using Code = CheckpointError::Code;

struct TensorSlot {
  std::string name;
  Tensor* tensor;
};

ModelParams skeleton(const ModelConfig& config) {
  ModelParams p;
  p.config = config;
  for (std::size_t b = 0; b < config.dilations.size(); ++b) {
    BasicConvBlock<float> blk;
    blk.weight = Tensor(config.block_spec(b).weight_shape());
    blk.bn = layers::BatchNormState<float>::identity(config.hidden);
    p.blocks.push_back(std::move(blk));
  }
  p.head_weight = Tensor({config.num_classes, config.hidden});
  p.head_bias = Tensor({config.num_classes});
  return p;
}

std::vector<TensorSlot> slots(ModelParams& p) {
  std::vector<TensorSlot> out;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    auto& blk = p.blocks[b];
    out.push_back({prefix + ".conv.weight", &blk.weight});
    out.push_back({prefix + ".bn.gamma", &blk.bn.gamma});
    out.push_back({prefix + ".bn.beta", &blk.bn.beta});
    out.push_back({prefix + ".bn.running_mean", &blk.bn.running_mean});
    out.push_back({prefix + ".bn.running_var", &blk.bn.running_var});
  }
  out.push_back({"head.weight", &p.head_weight});
  out.push_back({"head.bias", &p.head_bias});
  return out;
}

std::vector<TensorSlot> slots(BaselineParams& p) {
  return {{"linear.weight", &p.weight}, {"linear.bias", &p.bias}};
}

}  // namespace

const char* to_string(ModelKind kind) noexcept {
  return kind == ModelKind::cdcnn ? "cdcnn" : "linear_baseline";
}

std::vector<std::uint8_t> save_checkpoint(const Checkpoint& ckpt) {
  // Work on a copy so slots() can hand out mutable pointers uniformly.
  auto params = ckpt.params;
  std::vector<TensorSlot> tensors =
      std::visit([](auto& p) { return slots(p); }, params);

  nlohmann::json directory = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& s : tensors) {
    const std::size_t nbytes = s.tensor->size() * 4;
    directory.push_back({{"name", s.name}, {"shape", s.tensor->shape()}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
  }

  nlohmann::json header{
      {"model_kind", to_string(ckpt.kind())},
      {"config", ckpt.config},
      {"channel_names", ckpt.channel_names},
      {"label_names", ckpt.label_names},
      {"normalizer",
       {{"enabled", ckpt.normalizer.enabled}, {"mean", ckpt.normalizer.mean}, {"std", ckpt.normalizer.stddev}}},
      {"split", ckpt.split ? nlohmann::json(*ckpt.split) : nlohmann::json(nullptr)},
      {"tensors", directory},
  };
  if (const auto* mp = std::get_if<ModelParams>(&ckpt.params); mp && !mp->blocks.empty()) {
    header["batchnorm"] = {{"momentum", mp->blocks.front().bn.momentum}, {"eps", mp->blocks.front().bn.eps}};
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreambleSize + text.size() + offset);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kCheckpointVersion);
  detail::append_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& s : tensors) detail::append_f32_le(out, s.tensor->data());
  return out;
}

Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kMagic, magic_len) != 0) {
    throw CheckpointError(Code::bad_magic, "checkpoint: bad magic (not a CDCN checkpoint)");
  }
  if (bytes.size() < kPreambleSize) {
    throw CheckpointError(Code::truncated, "checkpoint: truncated preamble");
  }
  if (bytes[4] != kCheckpointVersion) {
    throw CheckpointError(Code::version_mismatch, "checkpoint: version " + std::to_string(bytes[4]) +
                                                      ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::size_t header_len = detail::read_u32_le(bytes.data() + 5);
  if (bytes.size() < kPreambleSize + header_len) {
    throw CheckpointError(Code::truncated, "checkpoint: truncated header");
  }
  const auto payload = bytes.subspan(kPreambleSize + header_len);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreambleSize, bytes.begin() + kPreambleSize + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Code::inconsistent, std::string("checkpoint: unreadable header: ") + e.what());
  }

  Checkpoint ckpt;
  std::vector<TensorSlot> expected;
  try {
    ckpt.config = header.at("config").get<ModelConfig>();
    ckpt.channel_names = header.at("channel_names").get<std::vector<std::string>>();
    ckpt.label_names = header.at("label_names").get<std::vector<std::string>>();
    const auto& norm = header.at("normalizer");
    ckpt.normalizer.enabled = norm.at("enabled").get<bool>();
    ckpt.normalizer.mean = norm.at("mean").get<std::vector<float>>();
    ckpt.normalizer.stddev = norm.at("std").get<std::vector<float>>();
    if (!header.at("split").is_null()) ckpt.split = header.at("split").get<SplitSpec>();

    const auto kind = header.at("model_kind").get<std::string>();
    if (kind == "cdcnn") {
      ckpt.config.validate();
      ModelParams p = skeleton(ckpt.config);
      if (header.contains("batchnorm")) {
        for (auto& blk : p.blocks) {
          blk.bn.momentum = header["batchnorm"].at("momentum").get<double>();
          blk.bn.eps = header["batchnorm"].at("eps").get<double>();
        }
      }
      ckpt.params = std::move(p);
    } else if (kind == "linear_baseline") {
      ckpt.params = BaselineParams{Tensor({ckpt.config.num_classes, ckpt.config.time_steps * ckpt.config.in_channels}),
                                   Tensor({ckpt.config.num_classes})};
    } else {
      throw CheckpointError(Code::inconsistent, "checkpoint: unknown model kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Code::inconsistent, std::string("checkpoint: malformed header: ") + e.what());
  } catch (const UsageError& e) {
    throw CheckpointError(Code::inconsistent, std::string("checkpoint: invalid config: ") + e.what());
  } catch (const ShapeError& e) {
    throw CheckpointError(Code::inconsistent, std::string("checkpoint: invalid config: ") + e.what());
  }

  if (ckpt.channel_names.size() != ckpt.config.in_channels ||
      ckpt.label_names.size() != ckpt.config.num_classes ||
      ckpt.normalizer.mean.size() != ckpt.config.in_channels ||
      ckpt.normalizer.stddev.size() != ckpt.config.in_channels) {
    throw CheckpointError(Code::inconsistent, "checkpoint: names/normalizer do not match config extents");
  }

  expected = std::visit([](auto& p) { return slots(p); }, ckpt.params);
  if (!header.contains("tensors")) {
    throw CheckpointError(Code::inconsistent, "checkpoint: header has no tensor directory");
  }
  const auto& directory = header["tensors"];
  if (!directory.is_array() || directory.size() != expected.size()) {
    throw CheckpointError(Code::inconsistent, "checkpoint: tensor directory has wrong number of entries");
  }

  std::size_t offset = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& entry = directory[i];
    std::string name;
    Shape shape;
    std::size_t entry_offset = 0, nbytes = 0;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<Shape>();
      entry_offset = entry.at("offset").get<std::size_t>();
      nbytes = entry.at("nbytes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(Code::inconsistent, std::string("checkpoint: bad directory entry: ") + e.what());
    }
    Tensor& dst = *expected[i].tensor;
    if (name != expected[i].name || shape != dst.shape()) {
      throw CheckpointError(Code::inconsistent, "checkpoint: expected tensor " + expected[i].name +
                                                    shape_to_string(dst.shape()) + ", found " + name +
                                                    shape_to_string(shape));
    }
    if (nbytes != dst.size() * 4 || entry_offset != offset) {
      throw CheckpointError(Code::inconsistent, "checkpoint: length/offset mismatch for " + name);
    }
    if (payload.size() < offset + nbytes) {
      throw CheckpointError(Code::truncated, "checkpoint: payload truncated inside " + name);
    }
    detail::read_f32_le(payload.data() + offset, dst.data());
    offset += nbytes;
  }
  if (payload.size() != offset) {
    throw CheckpointError(Code::inconsistent, "checkpoint: " + std::to_string(payload.size() - offset) +
                                                  " trailing bytes after payload");
  }
  return ckpt;
}

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_binary_file(path, save_checkpoint(ckpt));
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
  return load_checkpoint(read_binary_file(path));
}

}  // namespace cdcnn
