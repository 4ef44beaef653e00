#include <random>

#include <gtest/gtest.h>

#include "cli_util.hpp"
#include "taxograft/pipeline.hpp"
#include "test_util.hpp"

namespace taxograft {
namespace {

using testing::rebased_config;
using testing::run_cli;
using testing::TempDir;
using testing::write_config;

std::string config_arg(const std::filesystem::path& p) { return "--config \"" + p.string() + "\""; }

class CliPipeline : public ::testing::Test {
 protected:
  CliPipeline() : dir_("cli") {
    config_ = rebased_config(dir_ / "data", dir_ / "run");
    path_ = write_config(dir_ / "config.json", config_);
    auto r = run_cli("synth " + config_arg(path_));
    EXPECT_EQ(r.code, 0) << r.output;
  }

  TempDir dir_;
  nlohmann::json config_;
  std::filesystem::path path_;
};

TEST_F(CliPipeline, AllEmitsReportAndManifests) {
  auto r = run_cli("all " + config_arg(path_));
  ASSERT_EQ(r.code, 0) << r.output;
  auto report = nlohmann::json::parse(testing::read_file(dir_ / "run" / "report.json"));
  for (const char* run : {"model", "substr", "random", "distance_neighbor"}) EXPECT_TRUE(report.at("runs").contains(run));
  for (const char* stage : {"build-graph", "make-dataset", "pretrain", "train", "expand", "evaluate"}) {
    auto manifest = nlohmann::json::parse(testing::read_file(dir_ / "run" / stage / "manifest.json"));
    EXPECT_EQ(manifest.at("stage"), stage);
    EXPECT_EQ(manifest.at("seed"), 42);
    EXPECT_EQ(manifest.at("version"), std::string(kVersion));
    for (const auto& [name, input] : manifest.at("inputs").items()) {
      EXPECT_EQ(input.at("sha256"), sha256_file(input.at("path").get<std::string>())) << stage << " " << name;
    }
  }
}

TEST_F(CliPipeline, StagesRerunFromSerializedInputs) {
  ASSERT_EQ(run_cli("all " + config_arg(path_)).code, 0);
  const std::string first = testing::read_file(dir_ / "run" / "expand" / "taxonomy.tsv");
  auto r = run_cli("expand " + config_arg(path_));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(testing::read_file(dir_ / "run" / "expand" / "taxonomy.tsv"), first);
}

TEST_F(CliPipeline, TrainWithoutDatasetIsMissingArtifact) {
  ASSERT_EQ(run_cli("build-graph " + config_arg(path_)).code, 0);
  auto r = run_cli("train " + config_arg(path_));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.output.rfind("MissingArtifact", 0), 0u) << r.output;
}

TEST_F(CliPipeline, SameSeedSameBytes) {
  ASSERT_EQ(run_cli("all " + config_arg(path_) + " --out \"" + (dir_ / "a").string() + "\"").code, 0);
  ASSERT_EQ(run_cli("all " + config_arg(path_) + " --out \"" + (dir_ / "b").string() + "\"").code, 0);
  for (const char* f : {"report.json", "train/model.bin", "train/model.json", "pretrain/encoder.bin",
                        "expand/taxonomy.tsv", "make-dataset/train.jsonl"}) {
    EXPECT_EQ(testing::read_file(dir_ / "a" / f), testing::read_file(dir_ / "b" / f)) << f;
  }
  const std::string seven = config_arg(path_) + " --seed 7 --out \"" + (dir_ / "c").string() + "\"";
  ASSERT_EQ(run_cli("build-graph " + seven).code, 0);
  ASSERT_EQ(run_cli("make-dataset " + seven).code, 0);
  EXPECT_NE(testing::read_file(dir_ / "a" / "make-dataset" / "train.jsonl"),
            testing::read_file(dir_ / "c" / "make-dataset" / "train.jsonl"));
}

TEST_F(CliPipeline, PrecomputedProviderRunsSameWiring) {
  auto vocab = load_vocabulary(dir_ / "data" / "vocab.txt");
  EmbeddingTable table;
  table.dim = 8;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (const auto& c : vocab.concepts()) {
    Eigen::RowVectorXd v(8);
    for (int k = 0; k < 8; ++k) v[k] = normal(rng);
    table.vectors[c.id] = v;
  }
  {
    auto out = open_output(dir_ / "emb.txt");
    write_embeddings(out, table, vocab);
  }
  auto c = config_;
  c["encoder"]["provider"] = "precomputed";
  c["paths"]["embeddings"] = (dir_ / "emb.txt").string();
  auto p = write_config(dir_ / "pre.json", c);
  auto r = run_cli("all " + config_arg(p));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "report.json"));
}

TEST(Cli, ConfigErrors) {
  TempDir dir("clierr");
  auto missing = run_cli("all --config \"" + (dir / "nope.json").string() + "\"");
  EXPECT_NE(missing.code, 0);
  EXPECT_EQ(missing.output.rfind("ConfigInvalid", 0), 0u) << missing.output;

  testing::write_file(dir / "bad.json", "{ not json");
  auto bad = run_cli("all " + config_arg(dir / "bad.json"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.output.rfind("ConfigInvalid", 0), 0u) << bad.output;

  auto c = rebased_config(dir / "data", dir / "run");
  auto p = write_config(dir / "c.json", c);
  auto threshold = run_cli("expand " + config_arg(p) + " --threshold 1.5");
  EXPECT_EQ(threshold.output.rfind("ConfigInvalid", 0), 0u) << threshold.output;

  auto nofile = run_cli("build-graph " + config_arg(p));
  EXPECT_EQ(nofile.code, 1);
  EXPECT_EQ(nofile.output.rfind("ConfigInvalid", 0), 0u) << nofile.output;

  auto sub = run_cli("frobnicate " + config_arg(p));
  EXPECT_EQ(sub.code, 2);
  EXPECT_EQ(sub.output.rfind("ConfigInvalid", 0), 0u) << sub.output;

  c["dataset"]["target_ratio"] = 1.5;
  auto range = run_cli("synth " + config_arg(write_config(dir / "r.json", c)));
  EXPECT_EQ(range.output.rfind("ConfigInvalid", 0), 0u) << range.output;
}

TEST(Cli, ParseStage) {
  EXPECT_EQ(parse_stage("make-dataset"), Stage::MakeDataset);
  EXPECT_EQ(to_string(Stage::BuildGraph), "build-graph");
  EXPECT_THROW(parse_stage("nope"), Error);
}

}  // namespace
}  // namespace taxograft
