#include "cdcnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdcnn/error.hpp"
#include "cdcnn/format.hpp"
#include "cdcnn/training.hpp"

namespace cdcnn {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : k_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw UsageError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= k_ ||
      static_cast<std::size_t>(predicted) >= k_) {
    throw DataError("confusion matrix: class index out of range");
  }
  ++counts_[static_cast<std::size_t>(truth) * k_ + static_cast<std::size_t>(predicted)];
  ++total_;
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += counts_[i * k_ + i];
  return t;
}

std::size_t ConfusionMatrix::support(std::size_t cls) const {
  std::size_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += count(cls, j);
  return s;
}

std::size_t ConfusionMatrix::predicted_count(std::size_t cls) const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += count(i, cls);
  return s;
}

double ConfusionMatrix::accuracy() const noexcept {
  return total_ == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(total_);
}

double ConfusionMatrix::precision(std::size_t cls) const {
  const auto p = predicted_count(cls);
  return p == 0 ? 0.0 : static_cast<double>(count(cls, cls)) / static_cast<double>(p);
}

double ConfusionMatrix::recall(std::size_t cls) const {
  const auto s = support(cls);
  return s == 0 ? 0.0 : static_cast<double>(count(cls, cls)) / static_cast<double>(s);
}

double ConfusionMatrix::f1(std::size_t cls) const {
  const double p = precision(cls), r = recall(cls);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ConfusionMatrix confusion_from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                           std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw ShapeError("confusion: truth/prediction length mismatch");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

namespace {

template <typename Params>
ConfusionMatrix confusion_impl(const Params& params, const Dataset& split) {
  if (split.empty()) throw DataError("cannot build a confusion matrix for an empty split");
  return confusion_from_predictions(split.labels(), predict_dataset(params, split), split.num_classes());
}

double accuracy_against(std::span<const int> pred, const Dataset& split) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == split.info(i).label;
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

template <typename Params>
ImportanceReport importance_impl(const Params& params, const Dataset& split, std::size_t repeats,
                                 std::uint64_t seed, PermutationScheme scheme) {
  if (split.empty()) throw DataError("permutation importance needs a non-empty split");
  if (repeats < 1) throw UsageError("permutation importance needs at least one repeat");

  ImportanceReport report;
  report.repeats = repeats;
  report.seed = seed;
  report.scheme = scheme;
  report.baseline_accuracy = accuracy_against(predict_dataset(params, split), split);

  const auto& names = split.meta().channel_names;
  for (std::size_t f = 0; f < split.channels(); ++f) {
    ChannelImportance ch;
    ch.name = names[f];
    ch.group = channel_group(names[f]);
    for (std::size_t r = 0; r < repeats; ++r) {
      Rng rng(Rng::derive(seed, {f, r}));
      const Dataset permuted = permute_channel(split, f, rng, scheme);
      ch.permuted_accuracy.push_back(accuracy_against(predict_dataset(params, permuted), permuted));
    }
    const double n = static_cast<double>(repeats);
    double drop_sum = 0.0;
    for (double a : ch.permuted_accuracy) drop_sum += report.baseline_accuracy - a;
    ch.importance_mean = drop_sum / n;
    ch.permuted_accuracy_mean =
        std::accumulate(ch.permuted_accuracy.begin(), ch.permuted_accuracy.end(), 0.0) / n;
    if (repeats > 1) {
      double sq = 0.0;
      for (double a : ch.permuted_accuracy) {
        const double d = (report.baseline_accuracy - a) - ch.importance_mean;
        sq += d * d;
      }
      ch.importance_std = std::sqrt(sq / (n - 1.0));
    }
    report.group_importance[ch.group] += ch.importance_mean;
    report.channels.push_back(std::move(ch));
  }
  return report;
}

}  // namespace

ConfusionMatrix confusion_matrix(const ModelParams& params, const Dataset& split) {
  return confusion_impl(params, split);
}

ConfusionMatrix confusion_matrix(const BaselineParams& params, const Dataset& split) {
  return confusion_impl(params, split);
}

Dataset permute_channel(const Dataset& split, std::size_t channel, std::span<const std::size_t> perm) {
  if (channel >= split.channels()) {
    throw UsageError("channel " + std::to_string(channel) + " out of range (dataset has " +
                     std::to_string(split.channels()) + ")");
  }
  if (perm.size() != split.size()) throw ShapeError("permutation length does not match split size");
  Dataset out = split;
  const std::size_t channels = split.channels();
  for (std::size_t i = 0; i < split.size(); ++i) {
    auto src = split.values(perm[i]);
    auto dst = out.mutable_values(i);
    for (std::size_t t = 0; t < split.time_steps(); ++t) dst[t * channels + channel] = src[t * channels + channel];
  }
  return out;
}

Dataset permute_channel(const Dataset& split, std::size_t channel, Rng& rng, PermutationScheme scheme) {
  if (channel >= split.channels()) {
    throw UsageError("channel " + std::to_string(channel) + " out of range (dataset has " +
                     std::to_string(split.channels()) + ")");
  }
  if (scheme == PermutationScheme::whole_series) {
    const auto perm = rng_permutation(rng, split.size());
    return permute_channel(split, channel, perm);
  }
  Dataset out = split;
  const std::size_t channels = split.channels();
  for (std::size_t t = 0; t < split.time_steps(); ++t) {
    const auto perm = rng_permutation(rng, split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
      out.mutable_values(i)[t * channels + channel] = split.values(perm[i])[t * channels + channel];
    }
  }
  return out;
}

std::vector<std::size_t> ImportanceReport::ranking() const {
  std::vector<std::size_t> order(channels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return channels[a].importance_mean > channels[b].importance_mean;
  });
  return order;
}

ImportanceReport permutation_importance(const ModelParams& params, const Dataset& split, std::size_t repeats,
                                        std::uint64_t seed, PermutationScheme scheme) {
  return importance_impl(params, split, repeats, seed, scheme);
}

ImportanceReport permutation_importance(const BaselineParams& params, const Dataset& split, std::size_t repeats,
                                        std::uint64_t seed, PermutationScheme scheme) {
  return importance_impl(params, split, repeats, seed, scheme);
}

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& label_names) {
  if (label_names.size() != cm.num_classes()) throw DataError("confusion_csv: label count mismatch");
  std::string out = "true\\predicted";
  for (const auto& n : label_names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < cm.num_classes(); ++i) {
    out += label_names[i];
    for (std::size_t j = 0; j < cm.num_classes(); ++j) out += "," + std::to_string(cm.count(i, j));
    out += "\n";
  }
  return out;
}

std::string importance_csv(const ImportanceReport& report) {
  std::string out = "channel_name,group,I_mean,I_std,A_perm_mean\n";
  for (const auto& ch : report.channels) {
    out += ch.name + "," + ch.group + "," + format_sig6(ch.importance_mean) + "," +
           format_sig6(ch.importance_std) + "," + format_sig6(ch.permuted_accuracy_mean) + "\n";
  }
  return out;
}

nlohmann::json importance_json(const ImportanceReport& report) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& ch : report.channels) {
    nlohmann::json perm = nlohmann::json::array();
    for (double a : ch.permuted_accuracy) perm.push_back(round_sig6(a));
    channels.push_back({{"channel_name", ch.name},
                        {"group", ch.group},
                        {"I_mean", round_sig6(ch.importance_mean)},
                        {"I_std", round_sig6(ch.importance_std)},
                        {"A_perm_mean", round_sig6(ch.permuted_accuracy_mean)},
                        {"A_perm", perm}});
  }
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [g, v] : report.group_importance) groups[g] = round_sig6(v);
  nlohmann::json ranking = nlohmann::json::array();
  for (auto i : report.ranking()) ranking.push_back(report.channels[i].name);
  return {{"baseline_accuracy", round_sig6(report.baseline_accuracy)},
          {"repeats", report.repeats},
          {"seed", report.seed},
          {"scheme", report.scheme == PermutationScheme::whole_series ? "whole_series" : "per_timestep"},
          {"channels", channels},
          {"group_importance_sum", groups},
          {"ranking", ranking}};
}

nlohmann::json metrics_json(const ConfusionMatrix& cm, const std::vector<std::string>& label_names) {
  nlohmann::json per_class = nlohmann::json::array();
  nlohmann::json counts = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.num_classes(); ++i) {
    per_class.push_back({{"label", label_names.at(i)},
                         {"precision", round_sig6(cm.precision(i))},
                         {"recall", round_sig6(cm.recall(i))},
                         {"f1", round_sig6(cm.f1(i))},
                         {"support", cm.support(i)}});
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < cm.num_classes(); ++j) row.push_back(cm.count(i, j));
    counts.push_back(row);
  }
  return {{"accuracy", round_sig6(cm.accuracy())},
          {"num_samples", cm.total()},
          {"per_class", per_class},
          {"confusion", counts},
          {"label_names", label_names}};
}

}  // namespace cdcnn
