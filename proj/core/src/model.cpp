#include "cdcnn/model.hpp"

#include <cmath>
#include <cstring>

#include "cdcnn/error.hpp"

namespace cdcnn {

void ModelConfig::validate() const {
  if (in_channels == 0 || hidden == 0 || num_classes < 2 || time_steps == 0) {
    throw UsageError("model config: channels, hidden size and time steps must be positive, "
                     "and there must be at least two classes");
  }
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw UsageError("model config: kernel size must be odd, got " + std::to_string(kernel_size));
  }
  if (dilations.empty()) throw UsageError("model config: at least one block is required");
  for (std::size_t i = 0; i < dilations.size(); ++i) {
    if (dilations[i] != (std::size_t{1} << i)) {
      throw UsageError("model config: dilation of block " + std::to_string(i) + " must be " +
                       std::to_string(std::size_t{1} << i) + ", got " +
                       std::to_string(dilations[i]));
    }
  }
  const std::size_t widest = dilations.back() * (kernel_size - 1) + 1;
  if (time_steps <= widest) {
    throw UsageError("model config: time_steps " + std::to_string(time_steps) +
                     " must exceed the widest block span " + std::to_string(widest));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw UsageError("model config: dropout must be in [0, 1)");
  }
}

std::size_t ModelConfig::receptive_field() const noexcept {
  std::size_t sum = 0;
  for (auto d : dilations) sum += d;
  return 1 + (kernel_size - 1) * sum;
}

layers::ConvSpec ModelConfig::block_spec(std::size_t block) const {
  return layers::ConvSpec{block == 0 ? in_channels : hidden, hidden, kernel_size, dilations.at(block)};
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"in_channels", c.in_channels}, {"time_steps", c.time_steps},
                     {"hidden", c.hidden},           {"kernel_size", c.kernel_size},
                     {"dilations", c.dilations},     {"dropout", c.dropout},
                     {"num_classes", c.num_classes}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("in_channels").get_to(c.in_channels);
  j.at("time_steps").get_to(c.time_steps);
  j.at("hidden").get_to(c.hidden);
  j.at("kernel_size").get_to(c.kernel_size);
  j.at("dilations").get_to(c.dilations);
  j.at("dropout").get_to(c.dropout);
  j.at("num_classes").get_to(c.num_classes);
}

std::vector<std::string> learnable_names(const ModelConfig& config) {
  std::vector<std::string> names;
  for (std::size_t b = 0; b < config.dilations.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    names.push_back(prefix + ".conv.weight");
    names.push_back(prefix + ".bn.gamma");
    names.push_back(prefix + ".bn.beta");
  }
  names.emplace_back("head.weight");
  names.emplace_back("head.bias");
  return names;
}

template <typename T>
std::vector<BasicTensor<T>*> learnable_tensors(BasicModelParams<T>& params) {
  std::vector<BasicTensor<T>*> out;
  for (auto& b : params.blocks) {
    out.push_back(&b.weight);
    out.push_back(&b.bn.gamma);
    out.push_back(&b.bn.beta);
  }
  out.push_back(&params.head_weight);
  out.push_back(&params.head_bias);
  return out;
}

std::vector<ParamRef> learnable_params(ModelParams& params) {
  const auto names = learnable_names(params.config);
  const auto tensors = learnable_tensors(params);
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < tensors.size(); ++i) out.push_back({names[i], tensors[i]});
  return out;
}

std::vector<NamedTensor<float>> all_tensors(const ModelParams& params) {
  std::vector<NamedTensor<float>> out;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    const auto& blk = params.blocks[b];
    out.push_back({prefix + ".conv.weight", &blk.weight});
    out.push_back({prefix + ".bn.gamma", &blk.bn.gamma});
    out.push_back({prefix + ".bn.beta", &blk.bn.beta});
    out.push_back({prefix + ".bn.running_mean", &blk.bn.running_mean});
    out.push_back({prefix + ".bn.running_var", &blk.bn.running_var});
  }
  out.push_back({"head.weight", &params.head_weight});
  out.push_back({"head.bias", &params.head_bias});
  return out;
}

std::size_t parameter_count(const ModelParams& params) noexcept {
  std::size_t n = 0;
  for (const auto& b : params.blocks) n += b.weight.size() + b.bn.gamma.size() + b.bn.beta.size();
  return n + params.head_weight.size() + params.head_bias.size();
}

namespace {

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const auto bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(fan_in)));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, Rng& rng) {
  config.validate();
  ModelParams p;
  p.config = config;
  for (std::size_t b = 0; b < config.dilations.size(); ++b) {
    const auto spec = config.block_spec(b);
    BasicConvBlock<float> blk;
    blk.weight = kaiming_uniform(spec.weight_shape(), spec.in_channels * spec.kernel_size, rng);
    blk.bn = layers::BatchNormState<float>::identity(config.hidden);
    p.blocks.push_back(std::move(blk));
  }
  p.head_weight = kaiming_uniform({config.num_classes, config.hidden}, config.hidden, rng);
  p.head_bias = Tensor({config.num_classes}, 0.0f);
  return p;
}

bool bit_identical(const ModelParams& a, const ModelParams& b) noexcept {
  if (!(a.config == b.config) || a.blocks.size() != b.blocks.size()) return false;
  const auto ta = all_tensors(a);
  const auto tb = all_tensors(b);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!bit_identical(*ta[i].tensor, *tb[i].tensor)) return false;
  }
  return true;
}

namespace {

template <typename T>
void check_input(const BasicModelParams<T>& params, const BasicTensor<T>& x) {
  const auto& c = params.config;
  if (x.rank() != 3 || x.dim(1) != c.in_channels || x.dim(2) != c.time_steps) {
    throw ShapeError("model input must be (N," + std::to_string(c.in_channels) + "," +
                     std::to_string(c.time_steps) + "), got " + shape_to_string(x.shape()));
  }
  require_finite(x, "model input");
}

template <typename T>
void check_activation(const BasicTensor<T>& a, std::size_t block) {
  if (!a.all_finite()) {
    throw NumericError("non-finite activation in block " + std::to_string(block));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> forward(BasicModelParams<T>& params, const BasicTensor<T>& x, Mode mode, Rng& rng,
                       BasicForwardCache<T>* cache) {
  check_input(params, x);
  const auto& cfg = params.config;
  if (cache) {
    cache->blocks.assign(params.blocks.size(), {});
    cache->time_steps = cfg.time_steps;
  }
  BasicTensor<T> h = x;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    auto& blk = params.blocks[b];
    BasicTensor<T> conv = layers::conv1d_circular_forward(h, cfg.block_spec(b), blk.weight);
    layers::BatchNormCache<T>* bn_cache = cache ? &cache->blocks[b].bn : nullptr;
    BasicTensor<T> normed = layers::batchnorm_forward(conv, blk.bn, mode, bn_cache);
    check_activation(normed, b);
    BasicTensor<T> act = layers::relu_forward(normed);
    auto dropped = layers::dropout_forward(act, cfg.dropout, mode, rng);
    if (cache) {
      cache->blocks[b].input = std::move(h);
      cache->blocks[b].pre_relu = std::move(normed);
      cache->blocks[b].dropout_mask = std::move(dropped.mask);
    }
    h = std::move(dropped.y);
  }
  BasicTensor<T> pooled = layers::global_avg_pool_forward(h);
  BasicTensor<T> logits = layers::linear_forward(pooled, params.head_weight, params.head_bias);
  if (!logits.all_finite()) throw NumericError("non-finite logits");
  if (cache) cache->pooled = std::move(pooled);
  return logits;
}

template <typename T>
BasicTensor<T> infer_features(const BasicModelParams<T>& params, const BasicTensor<T>& x) {
  check_input(params, x);
  const auto& cfg = params.config;
  BasicTensor<T> h = x;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    // Inference mode reads the running statistics without modifying them.
    auto bn = params.blocks[b].bn;
    BasicTensor<T> conv = layers::conv1d_circular_forward(h, cfg.block_spec(b), params.blocks[b].weight);
    BasicTensor<T> normed = layers::batchnorm_forward(conv, bn, Mode::inference);
    check_activation(normed, b);
    h = layers::relu_forward(normed);
  }
  return h;
}

template <typename T>
BasicTensor<T> infer(const BasicModelParams<T>& params, const BasicTensor<T>& x) {
  BasicTensor<T> pooled = layers::global_avg_pool_forward(infer_features(params, x));
  BasicTensor<T> logits = layers::linear_forward(pooled, params.head_weight, params.head_bias);
  if (!logits.all_finite()) throw NumericError("non-finite logits");
  return logits;
}

template <typename T>
BasicModelGrads<T> backward(const BasicModelParams<T>& params, const BasicForwardCache<T>& cache,
                            const BasicTensor<T>& grad_logits) {
  if (cache.blocks.size() != params.blocks.size()) {
    throw ShapeError("backward: cache does not belong to this model");
  }
  const auto& cfg = params.config;
  const std::size_t nb = params.blocks.size();
  BasicModelGrads<T> g;
  g.params.resize(3 * nb + 2);

  auto head = layers::linear_backward(grad_logits, cache.pooled, params.head_weight);
  g.params[3 * nb] = std::move(head.grad_w);
  g.params[3 * nb + 1] = std::move(head.grad_b);

  BasicTensor<T> grad = layers::global_avg_pool_backward(head.grad_x, cache.time_steps);
  for (std::size_t i = nb; i-- > 0;) {
    const auto& bc = cache.blocks[i];
    grad = layers::dropout_backward<T>(grad, bc.dropout_mask);
    grad = layers::relu_backward(grad, bc.pre_relu);
    auto bn = layers::batchnorm_backward(grad, bc.bn, params.blocks[i].bn);
    auto conv = layers::conv1d_circular_backward(bn.grad_x, bc.input, params.blocks[i].weight,
                                                 cfg.block_spec(i));
    g.params[3 * i] = std::move(conv.grad_w);
    g.params[3 * i + 1] = std::move(bn.grad_gamma);
    g.params[3 * i + 2] = std::move(bn.grad_beta);
    grad = std::move(conv.grad_x);
  }
  g.input = std::move(grad);
  return g;
}

int argmax(std::span<const float> row) noexcept {
  int best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  }
  return best;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("argmax_rows: expected (N,K) logits");
  const std::size_t k = logits.dim(1);
  std::vector<int> out(logits.dim(0));
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = argmax(logits.data().subspan(n * k, k));
  return out;
}

std::vector<int> predict(const ModelParams& params, const Tensor& x) {
  return argmax_rows(infer(params, x));
}

#define CDCNN_INSTANTIATE_MODEL(T)                                                                 \
  template std::vector<BasicTensor<T>*> learnable_tensors(BasicModelParams<T>&);                   \
  template BasicTensor<T> forward(BasicModelParams<T>&, const BasicTensor<T>&, Mode, Rng&,         \
                                  BasicForwardCache<T>*);                                          \
  template BasicTensor<T> infer(const BasicModelParams<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> infer_features(const BasicModelParams<T>&, const BasicTensor<T>&);       \
  template BasicModelGrads<T> backward(const BasicModelParams<T>&, const BasicForwardCache<T>&,    \
                                       const BasicTensor<T>&);

CDCNN_INSTANTIATE_MODEL(float)
CDCNN_INSTANTIATE_MODEL(double)

#undef CDCNN_INSTANTIATE_MODEL

}  // namespace cdcnn
