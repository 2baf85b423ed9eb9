#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "cdcnn/baseline.hpp"
#include "cdcnn/dataset.hpp"
#include "cdcnn/model.hpp"
#include "cdcnn/rng.hpp"

namespace cdcnn {

// Optimizer and stopping settings. Defaults: Adam at lr 0.01, at most 300
// epochs, patience 20 on validation accuracy, dropout 0.2.
struct TrainConfig {
  float lr = 0.01f;
  std::size_t max_epochs = 300;
  std::size_t patience = 20;
  std::size_t batch_size = 64;
  double dropout = 0.2;
  std::uint64_t seed = 0;
  bool standardize = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  double best_val_acc = 0.0;
  double first_batch_loss = 0.0;
  double wall_seconds = 0.0;

  // Floats rounded to six significant digits. Wall time is only included on
  // request because it differs between otherwise identical runs.
  nlohmann::json to_json(bool include_timing = false) const;
};

// Tracks the best validation accuracy. Only a strictly greater accuracy
// counts as an improvement; training stops once `patience` consecutive
// epochs pass without one.
class EarlyStopping {
public:
  explicit EarlyStopping(std::size_t patience);

  // Returns true when `val_acc` improves on every earlier epoch.
  bool observe(std::size_t epoch, double val_acc);
  bool should_stop() const noexcept { return since_best_ >= patience_; }

  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_value() const noexcept { return best_; }

private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = -1.0;
};

// Shuffled mini-batches covering 0..n-1 exactly once. A trailing batch
// with fewer than two samples is merged into the one before it.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

template <typename Params>
struct TrainResult {
  Params params;  // snapshot from the best validation epoch
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam on softmax cross-entropy with per-epoch validation and
// early stopping. Returns the parameters (including batch-norm running
// statistics) from the epoch with the best validation accuracy. Throws
// DataError for empty splits or shared subjects, NumericError (with epoch
// and batch) for a non-finite loss.
TrainResult<ModelParams> train(ModelParams params, const Dataset& train_split, const Dataset& val_split,
                               const TrainConfig& cfg, const EpochCallback& on_epoch = {});
TrainResult<BaselineParams> train(BaselineParams params, const Dataset& train_split,
                                  const Dataset& val_split, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch = {});

// Inference-mode predictions for every window of `ds`, in order.
std::vector<int> predict_dataset(const ModelParams& params, const Dataset& ds);
std::vector<int> predict_dataset(const BaselineParams& params, const Dataset& ds);

// Fraction of windows whose prediction equals the label. Throws DataError on
// an empty split.
double evaluate_split(const ModelParams& params, const Dataset& split);
double evaluate_split(const BaselineParams& params, const Dataset& split);

// Splits `ds` by subject and, when `standardize` is set, z-scores all three
// splits with statistics fitted on the training split only.
struct PreparedData {
  Splits splits;
  Normalizer normalizer;
};

PreparedData prepare_data(const Dataset& ds, const SplitSpec& spec, bool standardize);

// Throws DataError if `ds` cannot be fed to a model with this config.
void check_compatible(const ModelConfig& config, const Dataset& ds);

}  // namespace cdcnn
