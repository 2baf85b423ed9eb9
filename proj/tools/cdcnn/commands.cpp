#include "cdcnn/commands.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cdcnn/cdcnn.hpp"

namespace fs = std::filesystem;

namespace cdcnn::cli {

namespace {

// Integer counts must be at least `lo`.
CLI::Validator at_least(std::size_t lo) {
  const std::string bound = ">=" + std::to_string(lo);
  return CLI::Validator(
      [lo, bound](std::string& text) -> std::string {
        std::size_t v = 0;
        if (!CLI::detail::lexical_cast(text, v) || v < lo) return "value " + text + " is not an integer " + bound;
        return {};
      },
      bound);
}

struct SynthArgs {
  std::string out;
  std::size_t subjects = 8;
  std::size_t per_class = 100;
  std::uint64_t seed = 0;
  std::size_t time_steps = kWindowSteps;
};

struct InspectArgs {
  std::string data;
};

struct TrainArgs {
  std::string data;
  std::string split_spec;
  std::string model;
  std::string report;
  float lr = 0.01f;
  std::size_t epochs = 300;
  std::size_t patience = 20;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  double dropout = 0.2;
  std::size_t hidden = 64;
  bool no_standardize = false;
  bool baseline = false;
  bool timing = false;
};

struct EvalArgs {
  std::string data;
  std::string model;
  std::string split = "test";
  std::string split_spec;
  std::string report = "report.json";
  std::string confusion = "confusion.csv";
};

struct ImportanceArgs {
  std::string data;
  std::string model;
  std::string split = "test";
  std::string split_spec;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::string out = "importance.csv";
  std::string json;
  bool per_timestep = false;
};

void print_config(std::ostream& out, const std::string& command, const nlohmann::json& cfg) {
  out << "resolved config: " << nlohmann::json{{"command", command}, {"args", cfg}}.dump() << "\n";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kUsage;
    case ErrorKind::numeric: return kNumericFailure;
    case ErrorKind::data:
    case ErrorKind::shape:
    case ErrorKind::checkpoint:
    case ErrorKind::io: return kDataValidation;
  }
  return kInternal;
}

nlohmann::json file_fingerprint(const fs::path& file) {
  const auto bytes = read_binary_file(file);
  return {{"file", file.filename().string()}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}};
}

nlohmann::json dataset_fingerprint(const fs::path& dir) {
  return {{"meta", file_fingerprint(dir / "meta.json")},
          {"labels", file_fingerprint(dir / "labels.csv")},
          {"windows", file_fingerprint(dir / "windows.f32")}};
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
    if (ec) throw IoError("cannot create " + file.parent_path().string() + ": " + ec.message());
  }
}

// --- synth -----------------------------------------------------------------

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  print_config(out, "synth",
               {{"out", a.out}, {"subjects", a.subjects}, {"per_class", a.per_class}, {"seed", a.seed},
                {"time_steps", a.time_steps}});
  SyntheticOptions opt;
  opt.num_subjects = a.subjects;
  opt.windows_per_subject_per_class = a.per_class;
  opt.seed = a.seed;
  opt.time_steps = a.time_steps;
  const Dataset ds = generate_synthetic(opt);
  write_dataset(ds, a.out);
  out << "wrote " << ds.size() << " windows (" << a.subjects << " subjects) to " << a.out << "\n";
  return kOk;
}

// --- inspect ---------------------------------------------------------------

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  print_config(out, "inspect", {{"data", a.data}});
  const Dataset ds = load_dataset(a.data);
  out << "windows: " << ds.size() << "  time_steps: " << ds.time_steps() << "  channels: " << ds.channels()
      << "  subjects: " << ds.subjects().size() << "\n";
  const auto table = subject_class_table(ds);
  out << format_table(table);
  return kOk;
}

// --- train -----------------------------------------------------------------

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg;
  cfg.lr = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.batch_size = a.batch;
  cfg.dropout = a.dropout;
  cfg.seed = a.seed;
  cfg.standardize = !a.no_standardize;
  cfg.validate();

  const fs::path model_path = a.model;
  const fs::path report_path =
      a.report.empty() ? model_path.parent_path() / "train_report.json" : fs::path(a.report);
  print_config(out, "train",
               {{"data", a.data}, {"split_spec", a.split_spec}, {"model", a.model},
                {"report", report_path.string()}, {"train", cfg}, {"hidden", a.hidden},
                {"model_kind", a.baseline ? "linear_baseline" : "cdcnn"}});

  // Validate the split before touching the data payload.
  const SplitSpec spec = load_split_spec(a.split_spec);
  const Dataset ds = load_dataset(a.data);
  PreparedData prep = prepare_data(ds, spec, cfg.standardize);
  const auto& sp = prep.splits;
  out << "split sizes: train " << sp.train.size() << ", val " << sp.val.size() << ", test " << sp.test.size()
      << "\n";

  ModelConfig mc;
  mc.in_channels = ds.channels();
  mc.time_steps = ds.time_steps();
  mc.num_classes = ds.num_classes();
  mc.hidden = a.hidden;
  mc.dropout = cfg.dropout;
  mc.validate();

  auto progress = [&out](const EpochRecord& e) {
    out << "epoch " << e.epoch << "  train_loss " << format_sig6(e.train_loss) << "  train_acc "
        << format_sig6(e.train_acc) << "  val_acc " << format_sig6(e.val_acc) << "\n";
    out.flush();
  };

  Checkpoint ckpt;
  ckpt.config = mc;
  ckpt.channel_names = ds.meta().channel_names;
  ckpt.label_names = ds.meta().label_names;
  ckpt.normalizer = prep.normalizer;
  ckpt.split = spec;

  TrainReport report;
  double test_acc = -1.0;
  if (a.baseline) {
    auto result = train(init_baseline(ds.window_size(), ds.num_classes()), sp.train, sp.val, cfg, progress);
    if (!sp.test.empty()) test_acc = evaluate_split(result.params, sp.test);
    report = std::move(result.report);
    ckpt.params = std::move(result.params);
  } else {
    Rng init_rng(Rng::derive(cfg.seed, {0x1A17}));
    auto result = train(init_params(mc, init_rng), sp.train, sp.val, cfg, progress);
    if (!sp.test.empty()) test_acc = evaluate_split(result.params, sp.test);
    report = std::move(result.report);
    ckpt.params = std::move(result.params);
  }

  ensure_parent(model_path);
  write_checkpoint_file(model_path, ckpt);

  nlohmann::json rj = report.to_json(a.timing);
  rj["model_kind"] = to_string(ckpt.kind());
  rj["train_config"] = cfg;
  rj["model_config"] = mc;
  rj["split_sizes"] = {{"train", sp.train.size()}, {"val", sp.val.size()}, {"test", sp.test.size()}};
  if (test_acc >= 0.0) rj["test_accuracy"] = round_sig6(test_acc);
  ensure_parent(report_path);
  write_text_file(report_path, rj.dump(2) + "\n");

  out << "best epoch " << report.best_epoch << " (val_acc " << format_sig6(report.best_val_acc)
      << "), stopped at epoch " << report.stopped_epoch;
  if (test_acc >= 0.0) out << ", test_acc " << format_sig6(test_acc);
  out << ", " << format_sig6(report.wall_seconds) << " s\n";
  out << "wrote " << model_path.string() << " and " << report_path.string() << "\n";
  return kOk;
}

// --- shared by eval / importance ---------------------------------------------

struct LoadedModel {
  Checkpoint ckpt;
  Dataset split;
  std::string split_name;
};

LoadedModel load_for_evaluation(const std::string& data, const std::string& model, const std::string& split_name,
                                const std::string& split_spec) {
  const Dataset ds = load_dataset(data);
  Checkpoint ckpt = read_checkpoint_file(model);
  if (ckpt.channel_names != ds.meta().channel_names || ckpt.label_names != ds.meta().label_names) {
    throw DataError("checkpoint " + model + " is incompatible with dataset " + data +
                    ": channel or label names differ");
  }
  if (ckpt.config.time_steps != ds.time_steps()) {
    throw DataError("checkpoint " + model + " expects " + std::to_string(ckpt.config.time_steps) +
                    " time steps, dataset has " + std::to_string(ds.time_steps()));
  }

  Dataset selected;
  if (split_name == "all") {
    selected = ds;
  } else {
    std::optional<SplitSpec> spec = ckpt.split;
    if (!split_spec.empty()) spec = load_split_spec(split_spec);
    if (!spec) throw UsageError("no split spec in checkpoint; pass --split-spec or --split all");
    Splits s = split_by_subject(ds, *spec);
    selected = split_name == "train" ? std::move(s.train) : split_name == "val" ? std::move(s.val) : std::move(s.test);
  }
  if (selected.empty()) throw DataError("split '" + split_name + "' is empty");
  apply_normalizer(selected, ckpt.normalizer);
  return {std::move(ckpt), std::move(selected), split_name};
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  print_config(out, "eval",
               {{"data", a.data}, {"model", a.model}, {"split", a.split}, {"split_spec", a.split_spec},
                {"report", a.report}, {"confusion", a.confusion}});
  LoadedModel lm = load_for_evaluation(a.data, a.model, a.split, a.split_spec);
  const ConfusionMatrix cm =
      std::visit([&](const auto& p) { return confusion_matrix(p, lm.split); }, lm.ckpt.params);

  nlohmann::json report = metrics_json(cm, lm.ckpt.label_names);
  report["model_kind"] = to_string(lm.ckpt.kind());
  report["split"] = lm.split_name;
  report["provenance"] = {{"dataset", dataset_fingerprint(a.data)}, {"model", file_fingerprint(a.model)}};
  report["seeds"] = nlohmann::json::object();

  ensure_parent(a.report);
  write_text_file(a.report, report.dump(2) + "\n");
  ensure_parent(a.confusion);
  write_text_file(a.confusion, confusion_csv(cm, lm.ckpt.label_names));

  out << "accuracy " << format_sig6(cm.accuracy()) << " on " << cm.total() << " windows (" << lm.split_name
      << " split)\n";
  out << confusion_csv(cm, lm.ckpt.label_names);
  return kOk;
}

// --- importance ----------------------------------------------------------

int cmd_importance(const ImportanceArgs& a, std::ostream& out) {
  const fs::path csv_path = a.out;
  const fs::path json_path = a.json.empty() ? fs::path(csv_path).replace_extension(".json") : fs::path(a.json);
  print_config(out, "importance",
               {{"data", a.data}, {"model", a.model}, {"split", a.split}, {"split_spec", a.split_spec},
                {"repeats", a.repeats}, {"seed", a.seed}, {"out", csv_path.string()},
                {"json", json_path.string()}, {"scheme", a.per_timestep ? "per_timestep" : "whole_series"}});
  LoadedModel lm = load_for_evaluation(a.data, a.model, a.split, a.split_spec);
  const auto scheme = a.per_timestep ? PermutationScheme::per_timestep : PermutationScheme::whole_series;
  const ImportanceReport rep = std::visit(
      [&](const auto& p) { return permutation_importance(p, lm.split, a.repeats, a.seed, scheme); },
      lm.ckpt.params);

  ensure_parent(csv_path);
  write_text_file(csv_path, importance_csv(rep));
  nlohmann::json j = importance_json(rep);
  j["model_kind"] = to_string(lm.ckpt.kind());
  j["split"] = lm.split_name;
  j["provenance"] = {{"dataset", dataset_fingerprint(a.data)}, {"model", file_fingerprint(a.model)}};
  ensure_parent(json_path);
  write_text_file(json_path, j.dump(2) + "\n");

  out << "baseline accuracy " << format_sig6(rep.baseline_accuracy) << " on " << lm.split.size() << " windows\n";
  const auto order = rep.ranking();
  for (std::size_t r = 0; r < std::min<std::size_t>(5, order.size()); ++r) {
    const auto& ch = rep.channels[order[r]];
    out << "  #" << r + 1 << " " << ch.name << "  I=" << format_sig6(ch.importance_mean) << " +- "
        << format_sig6(ch.importance_std) << "\n";
  }
  for (const auto& [group, v] : rep.group_importance) out << "  group " << group << " sum " << format_sig6(v) << "\n";
  out << "wrote " << csv_path.string() << " and " << json_path.string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circular dilated CNN for smart-insole activity recognition", "cdcnn"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: $CDCNN_NUM_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic insole dataset");
  synth->add_option("--out", sa.out, "Output dataset directory")->required();
  synth->add_option("--subjects", sa.subjects, "Number of subjects")->check(at_least(1));
  synth->add_option("--per-class", sa.per_class, "Windows per subject and class")->check(at_least(1));
  synth->add_option("--seed", sa.seed, "Generator seed");
  synth->add_option("--time-steps", sa.time_steps, "Frames per window")->check(at_least(1));

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect", "Print the subject x class table of a dataset");
  inspect->add_option("--data", ia.data, "Dataset directory")->required();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train the CDCNN (or the linear baseline)");
  trn->add_option("--data", ta.data, "Dataset directory")->required();
  trn->add_option("--split-spec", ta.split_spec, "JSON file {train:[..], val:[..], test:[..]}")->required();
  trn->add_option("--model", ta.model, "Checkpoint output path")->required();
  trn->add_option("--report", ta.report, "Training report path (default: train_report.json next to --model)");
  trn->add_option("--lr", ta.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  trn->add_option("--epochs", ta.epochs, "Maximum epochs")->check(at_least(1));
  trn->add_option("--patience", ta.patience, "Early-stopping patience (epochs)")->check(at_least(1));
  trn->add_option("--batch", ta.batch, "Mini-batch size")->check(at_least(2));
  trn->add_option("--seed", ta.seed, "Seed for initialization, shuffling and dropout");
  trn->add_option("--dropout", ta.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.999));
  trn->add_option("--hidden", ta.hidden, "Hidden channels per block")->check(at_least(1));
  trn->add_flag("--no-standardize", ta.no_standardize, "Skip per-channel z-scoring");
  trn->add_flag("--baseline", ta.baseline, "Train the linear flattened-window baseline instead");
  trn->add_flag("--timing", ta.timing, "Include wall time in the report (breaks byte-identical reruns)");

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "Accuracy, per-class metrics and confusion matrix");
  evl->add_option("--data", ea.data, "Dataset directory")->required();
  evl->add_option("--model", ea.model, "Checkpoint")->required();
  evl->add_option("--split", ea.split, "train | val | test | all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  evl->add_option("--split-spec", ea.split_spec, "Override the split stored in the checkpoint");
  evl->add_option("--report", ea.report, "Metrics JSON output");
  evl->add_option("--confusion", ea.confusion, "Confusion matrix CSV output");

  ImportanceArgs pa;
  auto* imp = app.add_subcommand("importance", "Permutation feature importance per channel");
  imp->add_option("--data", pa.data, "Dataset directory")->required();
  imp->add_option("--model", pa.model, "Checkpoint")->required();
  imp->add_option("--split", pa.split, "train | val | test | all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  imp->add_option("--split-spec", pa.split_spec, "Override the split stored in the checkpoint");
  imp->add_option("--repeats", pa.repeats, "Shuffles per channel")->check(at_least(1));
  imp->add_option("--seed", pa.seed, "Permutation seed");
  imp->add_option("--out", pa.out, "Importance CSV output");
  imp->add_option("--json", pa.json, "Importance JSON output (default: --out with .json)");
  imp->add_flag("--per-timestep", pa.per_timestep, "Shuffle each time step independently");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  if (threads > 0) set_thread_count(threads);

  try {
    if (*synth) return cmd_synth(sa, out);
    if (*inspect) return cmd_inspect(ia, out);
    if (*trn) return cmd_train(ta, out);
    if (*evl) return cmd_eval(ea, out);
    if (*imp) return cmd_importance(pa, out);
  } catch (const Error& e) {
    err << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace cdcnn::cli
