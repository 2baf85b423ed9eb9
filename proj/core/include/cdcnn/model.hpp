#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdcnn/adam.hpp"
#include "cdcnn/layers.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/tensor.hpp"

namespace cdcnn {

using layers::Mode;

// Architecture hyperparameters. Defaults describe the insole network:
// 24 input channels, 160-step windows, four blocks of 64 channels with
// kernel 3 and dilations 1, 2, 4, 8, dropout 0.2 and four classes.
struct ModelConfig {
  std::size_t in_channels = 24;
  std::size_t time_steps = 160;
  std::size_t hidden = 64;
  std::size_t kernel_size = 3;
  std::vector<std::size_t> dilations{1, 2, 4, 8};
  double dropout = 0.2;
  std::size_t num_classes = 4;

  // Throws UsageError if any field is out of range, dilations[i] != 2^i, or
  // the sequence is not longer than the widest block's footprint.
  void validate() const;

  // Input steps that influence one pre-pooling output: 1 + (k - 1) * sum(d).
  std::size_t receptive_field() const noexcept;

  layers::ConvSpec block_spec(std::size_t block) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

template <typename T>
struct BasicConvBlock {
  BasicTensor<T> weight;  // (C_out, C_in, k)
  layers::BatchNormState<T> bn;
};

// All tensors of one network, including batch-norm running statistics.
template <typename T>
struct BasicModelParams {
  ModelConfig config;
  std::vector<BasicConvBlock<T>> blocks;
  BasicTensor<T> head_weight;  // (K, H)
  BasicTensor<T> head_bias;    // (K)

  template <typename U>
  BasicModelParams<U> cast() const {
    BasicModelParams<U> out;
    out.config = config;
    for (const auto& b : blocks) {
      BasicConvBlock<U> nb;
      nb.weight = b.weight.template cast<U>();
      nb.bn.gamma = b.bn.gamma.template cast<U>();
      nb.bn.beta = b.bn.beta.template cast<U>();
      nb.bn.running_mean = b.bn.running_mean.template cast<U>();
      nb.bn.running_var = b.bn.running_var.template cast<U>();
      nb.bn.momentum = b.bn.momentum;
      nb.bn.eps = b.bn.eps;
      out.blocks.push_back(std::move(nb));
    }
    out.head_weight = head_weight.template cast<U>();
    out.head_bias = head_bias.template cast<U>();
    return out;
  }
};

using ModelParams = BasicModelParams<float>;
using ModelParamsD = BasicModelParams<double>;

// A read-only view of one named tensor, used for checkpoints and comparisons.
template <typename T>
struct NamedTensor {
  std::string name;
  const BasicTensor<T>* tensor;
};

// Learnable tensors in optimizer order: per block conv weight, bn gamma, bn
// beta; then head weight and bias. Names look like "block0.conv.weight".
std::vector<ParamRef> learnable_params(ModelParams& params);
template <typename T>
std::vector<BasicTensor<T>*> learnable_tensors(BasicModelParams<T>& params);
std::vector<std::string> learnable_names(const ModelConfig& config);

// Learnables plus running statistics ("block0.bn.running_mean", ...).
std::vector<NamedTensor<float>> all_tensors(const ModelParams& params);

std::size_t parameter_count(const ModelParams& params) noexcept;

// Kaiming-uniform conv/linear weights (bound sqrt(6 / fan_in)), identity
// batch-norm, zero head bias.
ModelParams init_params(const ModelConfig& config, Rng& rng);

bool bit_identical(const ModelParams& a, const ModelParams& b) noexcept;

// Per-block intermediates recorded by a training-mode forward pass.
template <typename T>
struct BasicBlockCache {
  BasicTensor<T> input;
  layers::BatchNormCache<T> bn;
  BasicTensor<T> pre_relu;
  std::vector<T> dropout_mask;
};

template <typename T>
struct BasicForwardCache {
  std::vector<BasicBlockCache<T>> blocks;
  BasicTensor<T> pooled;
  std::size_t time_steps = 0;
};

template <typename T>
struct BasicModelGrads {
  std::vector<BasicTensor<T>> params;  // same order as learnable_tensors()
  BasicTensor<T> input;
};

// Logits (N, K) for x (N, C_in, T). Training mode uses batch statistics,
// updates the running estimates and applies dropout drawn from `rng`;
// inference mode leaves params untouched and ignores rng.
template <typename T>
BasicTensor<T> forward(BasicModelParams<T>& params, const BasicTensor<T>& x, Mode mode, Rng& rng,
                       BasicForwardCache<T>* cache = nullptr);

// Inference-mode logits.
template <typename T>
BasicTensor<T> infer(const BasicModelParams<T>& params, const BasicTensor<T>& x);

// Inference-mode output of the last block, before pooling: (N, H, T).
template <typename T>
BasicTensor<T> infer_features(const BasicModelParams<T>& params, const BasicTensor<T>& x);

template <typename T>
BasicModelGrads<T> backward(const BasicModelParams<T>& params, const BasicForwardCache<T>& cache,
                            const BasicTensor<T>& grad_logits);

// Index of the largest element; ties go to the lowest index.
int argmax(std::span<const float> row) noexcept;
std::vector<int> argmax_rows(const Tensor& logits);

std::vector<int> predict(const ModelParams& params, const Tensor& x);

}  // namespace cdcnn
