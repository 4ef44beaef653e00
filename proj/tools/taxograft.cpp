#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "taxograft/error.hpp"
#include "taxograft/pipeline.hpp"

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("taxograft");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("TAXOGRAFT_LOG")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"Taxonomy expansion from user clicks"};
  app.set_version_flag("--version", std::string(taxograft::kVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> threshold;
  bool prune_all = false;

  const std::pair<const char*, const char*> stages[] = {
      {"build-graph", "identify click items and build the heterogeneous graph"},
      {"make-dataset", "sample balanced positives and negatives, split 60/20/20"},
      {"pretrain", "masked pretraining of the relation encoder and contrastive node pretraining"},
      {"train", "train the edge classifier with early stopping"},
      {"expand", "score click edges and grow the taxonomy level by level"},
      {"evaluate", "score the model and baselines against gold edges"},
      {"synth", "generate the synthetic benchmark"},
      {"all", "run every stage from build-graph to evaluate"},
  };
  for (const auto& [name, description] : stages) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "root seed (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--threshold", threshold, "acceptance threshold in (0, 1)");
    sub->add_flag("--prune-all", prune_all, "prune redundant original edges too");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "ConfigInvalid: " << e.what() << '\n';
    return 2;
  }

  try {
    taxograft::RunConfig config = taxograft::load_config(config_path);
    if (seed) {
      config.seed = *seed;
      config.propagate_seed();
    }
    if (out) config.out = *out;
    if (threshold) config.threshold = *threshold;
    if (prune_all) config.prune_all = true;
    const taxograft::Stage stage = taxograft::parse_stage(app.get_subcommands().front()->get_name());
    taxograft::run_stage(stage, config);
  } catch (const taxograft::Error& e) {
    std::cerr << e.category() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "Io: " << e.what() << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
