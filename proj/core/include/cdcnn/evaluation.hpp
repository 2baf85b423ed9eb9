#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdcnn/baseline.hpp"
#include "cdcnn/dataset.hpp"
#include "cdcnn/model.hpp"
#include "cdcnn/rng.hpp"

namespace cdcnn {

// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(int truth, int predicted);

  std::size_t num_classes() const noexcept { return k_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * k_ + predicted); }
  std::size_t total() const noexcept { return total_; }
  std::size_t trace() const noexcept;
  std::size_t support(std::size_t cls) const;          // row sum
  std::size_t predicted_count(std::size_t cls) const;  // column sum

  double accuracy() const noexcept;
  // 0 when the class was never predicted / never present.
  double precision(std::size_t cls) const;
  double recall(std::size_t cls) const;
  double f1(std::size_t cls) const;

private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

ConfusionMatrix confusion_from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                           std::size_t num_classes);
ConfusionMatrix confusion_matrix(const ModelParams& params, const Dataset& split);
ConfusionMatrix confusion_matrix(const BaselineParams& params, const Dataset& split);

enum class PermutationScheme {
  whole_series,   // swap channel f's full time series between samples
  per_timestep,   // independent shuffle across samples at every time step
};

// Copy of `split` where channel f has been shuffled across samples: with the
// whole-series scheme, sample i receives sample perm[i]'s series for channel
// f. Other channels are untouched. Throws UsageError if f is out of range.
Dataset permute_channel(const Dataset& split, std::size_t channel, Rng& rng,
                        PermutationScheme scheme = PermutationScheme::whole_series);
// Same, with an explicit permutation (whole-series scheme).
Dataset permute_channel(const Dataset& split, std::size_t channel, std::span<const std::size_t> perm);

struct ChannelImportance {
  std::string name;
  std::string group;
  std::vector<double> permuted_accuracy;  // one per repeat
  double permuted_accuracy_mean = 0.0;
  double importance_mean = 0.0;  // baseline accuracy - mean permuted accuracy
  double importance_std = 0.0;   // sample std over repeats (0 for one repeat)
};

struct ImportanceReport {
  double baseline_accuracy = 0.0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  PermutationScheme scheme = PermutationScheme::whole_series;
  std::vector<ChannelImportance> channels;
  // Sum of importance_mean per sensor group (pressure / accel / gyro / other).
  std::map<std::string, double> group_importance;

  // Channel indices ordered by decreasing importance_mean (stable on ties).
  std::vector<std::size_t> ranking() const;
};

// Accuracy drop per channel when that channel is shuffled across samples,
// averaged over `repeats` shuffles. Channel f, repeat r draws from
// Rng::derive(seed, {f, r}), so the report does not depend on evaluation order.
ImportanceReport permutation_importance(const ModelParams& params, const Dataset& split,
                                        std::size_t repeats, std::uint64_t seed,
                                        PermutationScheme scheme = PermutationScheme::whole_series);
ImportanceReport permutation_importance(const BaselineParams& params, const Dataset& split,
                                        std::size_t repeats, std::uint64_t seed,
                                        PermutationScheme scheme = PermutationScheme::whole_series);

// Header row and column carry the label names.
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& label_names);
// channel_name,group,I_mean,I_std,A_perm_mean
std::string importance_csv(const ImportanceReport& report);
nlohmann::json importance_json(const ImportanceReport& report);
// accuracy, per-class precision/recall/f1/support and the confusion counts.
nlohmann::json metrics_json(const ConfusionMatrix& cm, const std::vector<std::string>& label_names);

}  // namespace cdcnn
