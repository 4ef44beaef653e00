#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "taxograft/eval.hpp"
#include "taxograft/model.hpp"
#include "taxograft/relational.hpp"
#include "taxograft/structural.hpp"

namespace taxograft {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Stage { BuildGraph, MakeDataset, Pretrain, Train, Expand, Evaluate, Synth, All };

std::string_view to_string(Stage stage) noexcept;
Stage parse_stage(std::string_view name);

// Relative paths are taken as given, i.e. against the working directory.
struct RunConfig {
  struct Paths {
    std::filesystem::path vocab;
    std::filesystem::path taxonomy;
    std::filesystem::path clicklog;
    std::filesystem::path corpus;
    std::filesystem::path embeddings;      // only for the precomputed provider
    std::filesystem::path gold_edges;      // evaluate
    std::filesystem::path gold_taxonomy;   // evaluate
  } paths;

  std::uint64_t seed = 42;
  std::filesystem::path out = "runs/default";

  // encoder
  std::string provider = "reference";
  Eigen::Index relation_dim = 64;
  bool interaction = true;
  MaskingOptions masking;
  // structure
  ContrastiveOptions contrastive;
  bool use_click_graph = true;
  // classifier
  ModelConfig model;
  TrainConfig training;
  // self-supervision
  int per_positive = 1;
  double target_ratio = 0.3;
  double shuffle_share = 0.5;
  double keep_prob = 1.0;
  // expansion
  double threshold = 0.5;
  bool prune_all = false;
  // synthetic data
  std::filesystem::path synth_dir = "data/synth";
  SynthSpec synth;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  // Range checks, plus existence of the input files `stage` reads.
  void validate(Stage stage) const;
  // Pushes the root seed into every per-stage option block.
  void propagate_seed();
};

RunConfig load_config(const std::filesystem::path& path);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Runs one stage (or the whole chain for Stage::All). Artifacts land under
// config.out; every stage also writes <stage>/manifest.json.
void run_stage(Stage stage, const RunConfig& config);

}  // namespace taxograft
