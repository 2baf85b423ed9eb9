#include "cdcnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cdcnn/error.hpp"
#include "cdcnn/format.hpp"
#include "cdcnn/layers.hpp"

namespace cdcnn {

namespace {

constexpr std::size_t kInferenceChunk = 256;

enum : std::uint64_t { kShuffleStream = 1, kDropoutStream = 2 };

// Adapters giving both model kinds the same surface for the training loop.
struct CdcnnOps {
  using Params = ModelParams;
  using Cache = BasicForwardCache<float>;

  static Tensor input(const Dataset& ds, std::span<const std::size_t> idx) {
    return channels_first_batch(ds, idx);
  }
  static Tensor forward_train(Params& p, const Tensor& x, Rng& rng, Cache& cache) {
    return forward(p, x, Mode::training, rng, &cache);
  }
  static std::vector<Tensor> backward(const Params& p, const Cache& cache, const Tensor&, const Tensor& grad) {
    return cdcnn::backward(p, cache, grad).params;
  }
  static std::vector<int> predict(const Params& p, const Tensor& x) { return cdcnn::predict(p, x); }
  static void check(const Params& p, const Dataset& ds) { check_compatible(p.config, ds); }
};

struct BaselineOps {
  using Params = BaselineParams;
  struct Cache {};

  static Tensor input(const Dataset& ds, std::span<const std::size_t> idx) { return flat_batch(ds, idx); }
  static Tensor forward_train(Params& p, const Tensor& x, Rng&, Cache&) { return baseline_forward(p, x); }
  static std::vector<Tensor> backward(const Params& p, const Cache&, const Tensor& x, const Tensor& grad) {
    auto g = baseline_backward(p, x, grad);
    return {std::move(g.weight), std::move(g.bias)};
  }
  static std::vector<int> predict(const Params& p, const Tensor& x) { return baseline_predict(p, x); }
  static void check(const Params& p, const Dataset& ds) {
    if (p.num_features() != ds.window_size() || p.num_classes() != ds.num_classes()) {
      throw DataError("baseline expects " + std::to_string(p.num_features()) + " features and " +
                      std::to_string(p.num_classes()) + " classes, dataset has " +
                      std::to_string(ds.window_size()) + " and " + std::to_string(ds.num_classes()));
    }
  }
};

template <typename Ops>
std::vector<int> predict_all(const typename Ops::Params& params, const Dataset& ds) {
  Ops::check(params, ds);
  std::vector<int> out;
  out.reserve(ds.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += kInferenceChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(ds.size(), start + kInferenceChunk); ++i) idx.push_back(i);
    const auto pred = Ops::predict(params, Ops::input(ds, idx));
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

template <typename Ops>
double accuracy_of(const typename Ops::Params& params, const Dataset& split) {
  if (split.empty()) throw DataError("cannot evaluate an empty split");
  const auto pred = predict_all<Ops>(params, split);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == split.info(i).label;
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

void check_splits(const Dataset& train_split, const Dataset& val_split) {
  if (train_split.size() < 2) throw DataError("training split needs at least 2 windows");
  if (val_split.empty()) throw DataError("validation split is empty");
  if (!(train_split.meta() == val_split.meta())) {
    throw DataError("training and validation splits have different metadata");
  }
  const auto a = train_split.subjects();
  for (int s : val_split.subjects()) {
    if (a.count(s)) {
      throw DataError("subject " + std::to_string(s) + " appears in both training and validation splits");
    }
  }
}

template <typename Ops>
TrainResult<typename Ops::Params> run_training(typename Ops::Params params, const Dataset& train_split,
                                               const Dataset& val_split, const TrainConfig& cfg,
                                               const EpochCallback& on_epoch) {
  cfg.validate();
  check_splits(train_split, val_split);
  Ops::check(params, train_split);

  const auto started = std::chrono::steady_clock::now();
  Rng shuffle_rng(Rng::derive(cfg.seed, {kShuffleStream}));
  Rng dropout_rng(Rng::derive(cfg.seed, {kDropoutStream}));
  AdamState adam(AdamOptions{cfg.lr});
  EarlyStopping stopping(cfg.patience);

  TrainResult<typename Ops::Params> result{params, {}};
  const auto labels = train_split.labels();
  std::vector<int> batch_labels;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = make_batches(train_split.size(), cfg.batch_size, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      batch_labels.clear();
      for (auto i : idx) batch_labels.push_back(labels[i]);

      const Tensor x = Ops::input(train_split, idx);
      typename Ops::Cache cache;
      Tensor logits;
      try {
        logits = Ops::forward_train(params, x, dropout_rng, cache);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) + ": " + e.what());
      }
      const auto loss = layers::softmax_cross_entropy(logits, batch_labels);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1));
      }
      if (epoch == 1 && b == 0) result.report.first_batch_loss = loss.loss;
      loss_sum += loss.loss * static_cast<double>(idx.size());
      const auto pred = argmax_rows(logits);
      for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch_labels[i];

      const auto grads = Ops::backward(params, cache, x, loss.grad_logits);
      const auto refs = learnable_params(params);
      try {
        adam_step(refs, grads, adam);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) + ": " + e.what());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_split.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_split.size());
    rec.val_acc = accuracy_of<Ops>(params, val_split);
    result.report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (stopping.observe(epoch, rec.val_acc)) result.params = params;
    result.report.stopped_epoch = epoch;
    if (stopping.should_stop()) break;
  }

  result.report.best_epoch = stopping.best_epoch();
  result.report.best_val_acc = stopping.best_value();
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0f) || !std::isfinite(lr)) throw UsageError("learning rate must be positive");
  if (max_epochs < 1) throw UsageError("max_epochs must be >= 1");
  if (patience < 1) throw UsageError("patience must be >= 1");
  if (batch_size < 2) throw UsageError("batch size must be >= 2 (batch norm needs batch statistics)");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", round_sig6(c.lr)},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"batch_size", c.batch_size},
                     {"dropout", round_sig6(c.dropout)},
                     {"seed", c.seed},
                     {"standardize", c.standardize}};
}

nlohmann::json TrainReport::to_json(bool include_timing) const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : epochs) {
    hist.push_back({{"epoch", e.epoch},
                    {"train_loss", round_sig6(e.train_loss)},
                    {"train_acc", round_sig6(e.train_acc)},
                    {"val_acc", round_sig6(e.val_acc)}});
  }
  nlohmann::json j{{"epochs", hist},
                   {"best_epoch", best_epoch},
                   {"stopped_epoch", stopped_epoch},
                   {"best_val_acc", round_sig6(best_val_acc)},
                   {"first_batch_loss", round_sig6(first_batch_loss)}};
  if (include_timing) j["wall_seconds"] = round_sig6(wall_seconds);
  return j;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw UsageError("patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double val_acc) {
  if (val_acc > best_) {
    best_ = val_acc;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  const auto order = rng_permutation(rng, n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
    } else {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

TrainResult<ModelParams> train(ModelParams params, const Dataset& train_split, const Dataset& val_split,
                               const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  params.config.dropout = cfg.dropout;
  return run_training<CdcnnOps>(std::move(params), train_split, val_split, cfg, on_epoch);
}

TrainResult<BaselineParams> train(BaselineParams params, const Dataset& train_split, const Dataset& val_split,
                                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  return run_training<BaselineOps>(std::move(params), train_split, val_split, cfg, on_epoch);
}

std::vector<int> predict_dataset(const ModelParams& params, const Dataset& ds) {
  return predict_all<CdcnnOps>(params, ds);
}

std::vector<int> predict_dataset(const BaselineParams& params, const Dataset& ds) {
  return predict_all<BaselineOps>(params, ds);
}

double evaluate_split(const ModelParams& params, const Dataset& split) {
  return accuracy_of<CdcnnOps>(params, split);
}

double evaluate_split(const BaselineParams& params, const Dataset& split) {
  return accuracy_of<BaselineOps>(params, split);
}

PreparedData prepare_data(const Dataset& ds, const SplitSpec& spec, bool standardize) {
  PreparedData out{split_by_subject(ds, spec), Normalizer::identity(ds.channels())};
  if (standardize) {
    out.normalizer = fit_normalizer(out.splits.train);
    apply_normalizer(out.splits.train, out.normalizer);
    apply_normalizer(out.splits.val, out.normalizer);
    apply_normalizer(out.splits.test, out.normalizer);
  }
  return out;
}

void check_compatible(const ModelConfig& config, const Dataset& ds) {
  if (config.in_channels != ds.channels() || config.time_steps != ds.time_steps() ||
      config.num_classes != ds.num_classes()) {
    throw DataError("model expects windows of " + std::to_string(config.time_steps) + "x" +
                    std::to_string(config.in_channels) + " with " + std::to_string(config.num_classes) +
                    " classes, dataset has " + std::to_string(ds.time_steps()) + "x" +
                    std::to_string(ds.channels()) + " with " + std::to_string(ds.num_classes()));
  }
}

}  // namespace cdcnn
