#include <gtest/gtest.h>

#include <sstream>

#include "cdcnn/cdcnn.hpp"
#include "cdcnn/commands.hpp"
#include "support/fixtures.hpp"

using namespace cdcnn;
using cdcnn::testing::TempDir;
using cdcnn::testing::snapshot_dir;

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cdcnn");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const fs::path& path) { return path.string(); }

// Small synthetic corpus plus a split file, shared by the slower tests.
class CliPipeline : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cdcnn-cli");
    const auto r = run_cli({"synth", "--out", p(*dir_ / "data"), "--subjects", "4", "--per-class", "12",
                            "--seed", "5", "--time-steps", "32"});
    ASSERT_EQ(r.code, 0) << r.err;
    write_text_file(*dir_ / "split.json", R"({"train":[1,2],"val":[3],"test":[4]})");
    const auto t = run_cli({"train", "--data", p(*dir_ / "data"), "--split-spec", p(*dir_ / "split.json"),
                            "--model", p(*dir_ / "m.ckpt"), "--epochs", "3", "--hidden", "8", "--seed", "9"});
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path path(const std::string& name) { return *dir_ / name; }

  static TempDir* dir_;
};

TempDir* CliPipeline::dir_ = nullptr;

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"train"}).code, cli::kUsage);  // required flags missing
  EXPECT_EQ(run_cli({"synth", "--out", "x", "--subjects", "0"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"synth", "--out", "x", "--per-class", "-3"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"train", "--data", "d", "--split-spec", "s", "--model", "m", "--patience", "0"}).code,
            cli::kUsage);
  EXPECT_EQ(run_cli({"train", "--data", "d", "--split-spec", "s", "--model", "m", "--batch", "1"}).code,
            cli::kUsage);
  EXPECT_EQ(run_cli({"importance", "--data", "d", "--model", "m", "--repeats", "0"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"eval", "--data", "d", "--model", "m", "--split", "everything"}).code, cli::kUsage);
}

TEST(Cli, SynthWritesLoadableDeterministicData) {
  TempDir dir;
  const auto a = run_cli({"synth", "--out", p(dir / "a"), "--subjects", "8", "--per-class", "25", "--seed", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("resolved config:"), std::string::npos);
  const Dataset ds = load_dataset(dir / "a");
  EXPECT_EQ(ds.size(), 800u);
  EXPECT_EQ(ds.time_steps(), 160u);

  ASSERT_EQ(run_cli({"synth", "--out", p(dir / "b"), "--subjects", "8", "--per-class", "25", "--seed", "3"}).code, 0);
  EXPECT_EQ(snapshot_dir(dir / "a"), snapshot_dir(dir / "b"));
}

TEST(Cli, InspectPrintsSubjectTable) {
  TempDir dir;
  write_dataset(cdcnn::testing::insole_count_fixture(), dir / "insole");
  const auto r = run_cli({"inspect", "--data", p(dir / "insole")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("21069"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1960"), std::string::npos);
  for (const char* total : {"5066", "5559", "5043", "5401"}) EXPECT_NE(r.out.find(total), std::string::npos);
}

TEST(Cli, InspectEmptyAndMalformed) {
  TempDir dir;
  write_dataset(Dataset(DatasetMeta{}), dir / "empty");
  EXPECT_EQ(run_cli({"inspect", "--data", p(dir / "empty")}).code, 0);

  write_dataset(Dataset(DatasetMeta{}), dir / "bad");
  write_text_file(dir / "bad" / "meta.json", "{ not json");
  const auto r = run_cli({"inspect", "--data", p(dir / "bad")});
  EXPECT_EQ(r.code, cli::kDataValidation);
  EXPECT_NE(r.err.find("meta.json"), std::string::npos) << r.err;

  EXPECT_EQ(run_cli({"inspect", "--data", p(dir / "missing")}).code, cli::kDataValidation);
}

TEST(Cli, OverlappingSplitFailsBeforeTraining) {
  TempDir dir;
  ASSERT_EQ(run_cli({"synth", "--out", p(dir / "d"), "--subjects", "3", "--per-class", "2", "--time-steps", "32"}).code, 0);
  write_text_file(dir / "split.json", R"({"train":[1,2],"val":[2],"test":[3]})");
  const auto r = run_cli({"train", "--data", p(dir / "d"), "--split-spec", p(dir / "split.json"), "--model",
                          p(dir / "m.ckpt")});
  EXPECT_EQ(r.code, cli::kDataValidation);
  EXPECT_EQ(r.out.find("\nepoch 1 "), std::string::npos);  // no progress lines
  EXPECT_FALSE(fs::exists(dir / "m.ckpt"));

  write_text_file(dir / "partial.json", R"({"train":[1],"val":[2],"test":[]})");
  EXPECT_EQ(run_cli({"train", "--data", p(dir / "d"), "--split-spec", p(dir / "partial.json"), "--model",
                     p(dir / "m.ckpt")})
                .code,
            cli::kDataValidation);
}

TEST(Cli, NumericFailureExitCode) {
  TempDir dir;
  SyntheticOptions o;
  o.num_subjects = 2;
  o.windows_per_subject_per_class = 2;
  o.time_steps = 32;
  Dataset ds = generate_synthetic(o);
  for (auto& v : ds.all_values()) v = 3.0e38f;
  write_dataset(ds, dir / "d");
  write_text_file(dir / "split.json", R"({"train":[1],"val":[2],"test":[]})");
  const auto r = run_cli({"train", "--data", p(dir / "d"), "--split-spec", p(dir / "split.json"), "--model",
                          p(dir / "m.ckpt"), "--no-standardize", "--epochs", "1", "--hidden", "4"});
  EXPECT_EQ(r.code, cli::kNumericFailure) << r.err;
}

TEST_F(CliPipeline, TrainWritesCheckpointAndReport) {
  ASSERT_TRUE(fs::exists(path("m.ckpt")));
  const auto report = nlohmann::json::parse(read_text_file(path("train_report.json")));
  EXPECT_EQ(report.at("epochs").size(), 3u);
  EXPECT_TRUE(report.contains("best_epoch"));
  EXPECT_TRUE(report.contains("test_accuracy"));
  EXPECT_EQ(report.at("split_sizes").at("train"), 96);
  EXPECT_EQ(report.at("train_config").at("lr"), 0.01);
  EXPECT_EQ(report.at("model_config").at("hidden"), 8);
  const Checkpoint ckpt = read_checkpoint_file(path("m.ckpt"));
  EXPECT_EQ(ckpt.kind(), ModelKind::cdcnn);
  ASSERT_TRUE(ckpt.split.has_value());
  EXPECT_EQ(ckpt.split->test, std::vector<int>{4});
}

TEST_F(CliPipeline, TrainIsReproducible) {
  const auto r = run_cli({"train", "--data", p(path("data")), "--split-spec", p(path("split.json")), "--model",
                          p(path("again.ckpt")), "--report", p(path("again.json")), "--epochs", "3", "--hidden",
                          "8", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_binary_file(path("again.ckpt")), read_binary_file(path("m.ckpt")));
  EXPECT_EQ(read_text_file(path("again.json")), read_text_file(path("train_report.json")));
}

TEST_F(CliPipeline, EvalMatchesLibraryAndRepeats) {
  const auto a = run_cli({"eval", "--data", p(path("data")), "--model", p(path("m.ckpt")), "--report",
                          p(path("r1.json")), "--confusion", p(path("c1.csv"))});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run_cli({"eval", "--data", p(path("data")), "--model", p(path("m.ckpt")), "--report",
                          p(path("r2.json")), "--confusion", p(path("c2.csv"))});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_text_file(path("r1.json")), read_text_file(path("r2.json")));
  EXPECT_EQ(read_text_file(path("c1.csv")), read_text_file(path("c2.csv")));

  const Checkpoint ckpt = read_checkpoint_file(path("m.ckpt"));
  const Dataset ds = load_dataset(path("data"));
  Splits sp = split_by_subject(ds, *ckpt.split);
  apply_normalizer(sp.test, ckpt.normalizer);
  const double acc = evaluate_split(std::get<ModelParams>(ckpt.params), sp.test);
  const auto report = nlohmann::json::parse(read_text_file(path("r1.json")));
  EXPECT_EQ(report.at("accuracy").get<double>(), round_sig6(acc));
  EXPECT_EQ(report.at("num_samples"), 48);
  EXPECT_TRUE(report.contains("provenance"));
  EXPECT_TRUE(report.contains("seeds"));
  const std::string csv = read_text_file(path("c1.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "true\\predicted,Sitting,Standing,Tandem,Walking");
}

TEST_F(CliPipeline, EvalRejectsIncompatibleChannels) {
  Dataset ds = load_dataset(path("data"));
  DatasetMeta meta = ds.meta();
  meta.channel_names[0] = "heel";
  Dataset renamed(meta);
  for (std::size_t i = 0; i < ds.size(); ++i) renamed.add(ds.info(i), ds.values(i));
  write_dataset(renamed, path("renamed"));
  const auto r = run_cli({"eval", "--data", p(path("renamed")), "--model", p(path("m.ckpt")), "--report",
                          p(path("r3.json")), "--confusion", p(path("c3.csv"))});
  EXPECT_EQ(r.code, cli::kDataValidation);
  EXPECT_NE(r.err.find("channel"), std::string::npos) << r.err;
}

TEST_F(CliPipeline, CorruptCheckpointIsDataError) {
  auto bytes = read_binary_file(path("m.ckpt"));
  bytes.resize(bytes.size() / 2);
  write_binary_file(path("half.ckpt"), bytes);
  const auto r = run_cli({"eval", "--data", p(path("data")), "--model", p(path("half.ckpt")), "--report",
                          p(path("r4.json")), "--confusion", p(path("c4.csv"))});
  EXPECT_EQ(r.code, cli::kDataValidation);
  EXPECT_NE(r.err.find("truncated"), std::string::npos) << r.err;
}

TEST_F(CliPipeline, ImportanceIsReproducibleAndLeavesDataUntouched) {
  const auto before = snapshot_dir(path("data"));
  const auto a = run_cli({"importance", "--data", p(path("data")), "--model", p(path("m.ckpt")), "--repeats", "2",
                          "--seed", "4", "--out", p(path("i1.csv"))});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run_cli({"importance", "--data", p(path("data")), "--model", p(path("m.ckpt")), "--repeats", "2",
                          "--seed", "4", "--out", p(path("i2.csv"))});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_text_file(path("i1.csv")), read_text_file(path("i2.csv")));
  EXPECT_EQ(read_text_file(path("i1.json")), read_text_file(path("i2.json")));
  EXPECT_EQ(snapshot_dir(path("data")), before);
  const std::string csv = read_text_file(path("i1.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "channel_name,group,I_mean,I_std,A_perm_mean");
}

TEST(Cli, ImportanceRanksInjectedChannelFirst) {
  TempDir dir;
  write_dataset(cdcnn::testing::label_channel_dataset(3, 20, 19, 32, 6), dir / "d");
  write_text_file(dir / "split.json", R"({"train":[1],"val":[2],"test":[3]})");
  ASSERT_EQ(run_cli({"train", "--data", p(dir / "d"), "--split-spec", p(dir / "split.json"), "--model",
                     p(dir / "m.ckpt"), "--epochs", "10", "--patience", "5", "--hidden", "8", "--batch", "16"})
                .code,
            0);
  const auto r = run_cli({"importance", "--data", p(dir / "d"), "--model", p(dir / "m.ckpt"), "--repeats", "3",
                          "--out", p(dir / "imp.csv")});
  ASSERT_EQ(r.code, 0) << r.err;

  // Highest I_mean row of the CSV.
  std::istringstream csv(read_text_file(dir / "imp.csv"));
  std::string line, best_name;
  double best = -2.0;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 5u);
    if (std::stod(cells[2]) > best) {
      best = std::stod(cells[2]);
      best_name = cells[0];
    }
  }
  EXPECT_EQ(best_name, "accel_y");
  const auto j = nlohmann::json::parse(read_text_file(dir / "imp.json"));
  EXPECT_EQ(j.at("ranking").at(0), "accel_y");
}

TEST(Cli, BaselineTrainEvalImportance) {
  TempDir dir;
  ASSERT_EQ(run_cli({"synth", "--out", p(dir / "d"), "--subjects", "3", "--per-class", "6", "--time-steps", "32"}).code, 0);
  write_text_file(dir / "split.json", R"({"train":[1],"val":[2],"test":[3]})");
  const auto t = run_cli({"train", "--baseline", "--data", p(dir / "d"), "--split-spec", p(dir / "split.json"),
                          "--model", p(dir / "b.ckpt"), "--epochs", "5"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(read_checkpoint_file(dir / "b.ckpt").kind(), ModelKind::linear_baseline);
  EXPECT_EQ(run_cli({"eval", "--data", p(dir / "d"), "--model", p(dir / "b.ckpt"), "--report", p(dir / "r.json"),
                     "--confusion", p(dir / "c.csv")})
                .code,
            0);
  EXPECT_EQ(run_cli({"importance", "--data", p(dir / "d"), "--model", p(dir / "b.ckpt"), "--repeats", "1", "--out",
                     p(dir / "i.csv")})
                .code,
            0);
}

TEST_F(CliPipeline, ThreadCountDoesNotChangeResults) {
  const int saved = thread_count();
  const auto r = run_cli({"--threads", "3", "train", "--data", p(path("data")), "--split-spec", p(path("split.json")),
                          "--model", p(path("t3.ckpt")), "--report", p(path("t3.json")), "--epochs", "3", "--hidden",
                          "8", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_binary_file(path("t3.ckpt")), read_binary_file(path("m.ckpt")));
  set_thread_count(saved);
}
