#include "taxograft/pipeline.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "taxograft/checkpoint.hpp"
#include "taxograft/corpus_io.hpp"
#include "taxograft/error.hpp"
#include "taxograft/expander.hpp"
#include "taxograft/rng.hpp"
#include "taxograft/selfsup.hpp"

namespace taxograft {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 8> kStages{{
    {Stage::BuildGraph, "build-graph"},
    {Stage::MakeDataset, "make-dataset"},
    {Stage::Pretrain, "pretrain"},
    {Stage::Train, "train"},
    {Stage::Expand, "expand"},
    {Stage::Evaluate, "evaluate"},
    {Stage::Synth, "synth"},
    {Stage::All, "all"},
}};

}  // namespace

std::string_view to_string(Stage stage) noexcept {
  for (const auto& [s, name] : kStages) {
    if (s == stage) return name;
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (const auto& [s, n] : kStages) {
    if (n == name) return s;
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown subcommand '" + std::string(name) + "'");
}

// ---- config -------------------------------------------------------------------

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      auto path = [&](const char* key, fs::path& dst) {
        if (p.contains(key)) dst = p.at(key).get<std::string>();
      };
      path("vocab", c.paths.vocab);
      path("taxonomy", c.paths.taxonomy);
      path("clicklog", c.paths.clicklog);
      path("corpus", c.paths.corpus);
      path("embeddings", c.paths.embeddings);
      path("gold_edges", c.paths.gold_edges);
      path("gold_taxonomy", c.paths.gold_taxonomy);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      c.provider = e.value("provider", c.provider);
      c.relation_dim = e.value("dim", c.relation_dim);
      c.interaction = e.value("interaction", c.interaction);
      c.masking.epochs = e.value("mask_epochs", c.masking.epochs);
      c.masking.learning_rate = e.value("mask_learning_rate", c.masking.learning_rate);
      c.masking.mask_prob = e.value("mask_prob", c.masking.mask_prob);
    }
    if (j.contains("structural")) {
      const auto& s = j.at("structural");
      c.contrastive.epochs = s.value("epochs", c.contrastive.epochs);
      c.contrastive.negative_rate = s.value("negative_rate", c.contrastive.negative_rate);
      c.contrastive.learning_rate = s.value("learning_rate", c.contrastive.learning_rate);
      c.model.gcn_layers = s.value("gcn_layers", c.model.gcn_layers);
      c.use_click_graph = s.value("use_click_graph", c.use_click_graph);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.hidden = m.value("hidden", c.model.hidden);
      c.model.position_dim = m.value("position_dim", c.model.position_dim);
      c.model.train_tables = m.value("train_tables", c.model.train_tables);
      c.model.use_positions = m.value("use_positions", c.model.use_positions);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
      c.training.momentum = t.value("momentum", c.training.momentum);
      c.training.batch_size = t.value("batch_size", c.training.batch_size);
      c.training.epochs = t.value("epochs", c.training.epochs);
      c.training.patience = t.value("patience", c.training.patience);
    }
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      c.per_positive = d.value("per_positive", c.per_positive);
      c.target_ratio = d.value("target_ratio", c.target_ratio);
      c.shuffle_share = d.value("shuffle_share", c.shuffle_share);
      c.keep_prob = d.value("keep_prob", c.keep_prob);
    }
    if (j.contains("expand")) {
      const auto& x = j.at("expand");
      c.threshold = x.value("threshold", c.threshold);
      c.prune_all = x.value("prune_all", c.prune_all);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      if (s.contains("dir")) c.synth_dir = s.at("dir").get<std::string>();
      c.synth = SynthSpec::from_json(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("bad config value: ") + e.what());
  }
  c.propagate_seed();
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json synth_json = synth.to_json();
  synth_json["dir"] = synth_dir.generic_string();
  synth_json.erase("seed");
  return nlohmann::json{
      {"paths",
       {{"vocab", paths.vocab.generic_string()},
        {"taxonomy", paths.taxonomy.generic_string()},
        {"clicklog", paths.clicklog.generic_string()},
        {"corpus", paths.corpus.generic_string()},
        {"embeddings", paths.embeddings.generic_string()},
        {"gold_edges", paths.gold_edges.generic_string()},
        {"gold_taxonomy", paths.gold_taxonomy.generic_string()}}},
      {"seed", seed},
      {"out", out.generic_string()},
      {"encoder",
       {{"provider", provider},
        {"dim", relation_dim},
        {"interaction", interaction},
        {"mask_epochs", masking.epochs},
        {"mask_learning_rate", masking.learning_rate},
        {"mask_prob", masking.mask_prob}}},
      {"structural",
       {{"epochs", contrastive.epochs},
        {"negative_rate", contrastive.negative_rate},
        {"learning_rate", contrastive.learning_rate},
        {"gcn_layers", model.gcn_layers},
        {"use_click_graph", use_click_graph}}},
      {"model",
       {{"hidden", model.hidden},
        {"position_dim", model.position_dim},
        {"train_tables", model.train_tables},
        {"use_positions", model.use_positions}}},
      {"train",
       {{"learning_rate", training.learning_rate},
        {"momentum", training.momentum},
        {"batch_size", training.batch_size},
        {"epochs", training.epochs},
        {"patience", training.patience}}},
      {"dataset",
       {{"per_positive", per_positive},
        {"target_ratio", target_ratio},
        {"shuffle_share", shuffle_share},
        {"keep_prob", keep_prob}}},
      {"expand", {{"threshold", threshold}, {"prune_all", prune_all}}},
      {"synth", synth_json}};
}

void RunConfig::propagate_seed() {
  masking.seed = seed;
  contrastive.seed = seed;
  model.seed = seed;
  training.seed = seed;
  synth.seed = seed;
}

namespace {

void check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::ConfigInvalid, what);
}

void require_file(const fs::path& path, const char* key) {
  check(!path.empty(), std::string("paths.") + key + " is not set");
  check(fs::is_regular_file(path), std::string("paths.") + key + " does not exist: " + path.generic_string());
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void RunConfig::validate(Stage stage) const {
  check(relation_dim > 0 && model.hidden > 0 && model.position_dim > 0, "dimensions must be positive");
  check(model.gcn_layers >= 1, "structural.gcn_layers must be at least 1");
  check(masking.epochs >= 0 && masking.learning_rate > 0.0 && masking.mask_prob > 0.0 && masking.mask_prob <= 1.0,
        "encoder masking options out of range");
  check(contrastive.epochs >= 0 && contrastive.negative_rate > 0.0 && contrastive.learning_rate > 0.0,
        "structural options out of range");
  check(training.learning_rate > 0.0 && in_unit(training.momentum) && training.momentum < 1.0 &&
            training.batch_size >= 1 && training.epochs >= 1 && training.patience >= 1,
        "train options out of range");
  check(per_positive >= 1, "dataset.per_positive must be at least 1");
  check(in_unit(target_ratio) && target_ratio < 1.0, "dataset.target_ratio must lie in [0, 1)");
  check(in_unit(shuffle_share) && in_unit(keep_prob), "dataset ratios must lie in [0, 1]");
  check(threshold > 0.0 && threshold < 1.0, "expand.threshold must lie strictly between 0 and 1");
  check(provider == "reference" || provider == "precomputed", "encoder.provider must be reference or precomputed");
  check(!out.empty(), "out directory is not set");

  switch (stage) {
    case Stage::BuildGraph:
      require_file(paths.vocab, "vocab");
      require_file(paths.taxonomy, "taxonomy");
      require_file(paths.clicklog, "clicklog");
      break;
    case Stage::Pretrain:
      if (provider == "reference") require_file(paths.corpus, "corpus");
      if (provider == "precomputed") require_file(paths.embeddings, "embeddings");
      break;
    case Stage::Evaluate:
      require_file(paths.gold_edges, "gold_edges");
      require_file(paths.gold_taxonomy, "gold_taxonomy");
      break;
    case Stage::Synth:
      synth.validate();
      check(!synth_dir.empty(), "synth.dir is not set");
      break;
    case Stage::All:
      validate(Stage::BuildGraph);
      validate(Stage::Pretrain);
      if (!paths.gold_edges.empty() || !paths.gold_taxonomy.empty()) validate(Stage::Evaluate);
      break;
    default:
      break;
  }
}

RunConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorKind::ConfigInvalid, "config file not found: " + path.generic_string());
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
  }
  return RunConfig::from_json(j);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in = open_input(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &length);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < length; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[k]};
  return hex.str();
}

// ---- stages -------------------------------------------------------------------

namespace {

fs::path stage_dir(const RunConfig& c, Stage s) { return c.out / std::string(to_string(s)); }

void require_artifact(const fs::path& path, Stage producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::MissingArtifact,
                "missing " + path.generic_string() + "; run `" + std::string(to_string(producer)) + "` first");
  }
}

void write_manifest(const RunConfig& c, Stage stage, const std::vector<std::pair<std::string, fs::path>>& inputs,
                    const std::vector<std::string>& outputs) {
  const fs::path dir = stage_dir(c, stage);
  nlohmann::json in = nlohmann::json::object();
  for (const auto& [name, path] : inputs) {
    in[name] = {{"path", path.generic_string()}, {"sha256", sha256_file(path)}};
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& name : outputs) out[name] = sha256_file(dir / name);
  const nlohmann::json manifest{{"stage", to_string(stage)}, {"version", kVersion}, {"seed", c.seed},
                                {"config", c.to_json()},     {"inputs", in},         {"outputs", out}};
  auto file = open_output(dir / "manifest.json");
  file << manifest.dump(2) << '\n';
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  auto out = open_output(path);
  fn(out);
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.generic_string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  auto in = open_input(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

struct GraphStage {
  ConceptVocabulary vocab;
  Taxonomy taxonomy;
  HeteroGraph graph;
};

GraphStage load_graph_stage(const RunConfig& c) {
  const fs::path dir = stage_dir(c, Stage::BuildGraph);
  for (const char* name : {"vocab.txt", "taxonomy.tsv", "graph.tsv"}) require_artifact(dir / name, Stage::BuildGraph);
  GraphStage g;
  g.vocab = load_vocabulary(dir / "vocab.txt");
  g.taxonomy = load_taxonomy(dir / "taxonomy.tsv", g.vocab).taxonomy;
  auto in = open_input(dir / "graph.tsv");
  const HeteroGraph read = read_graph(in, g.vocab);
  g.graph = HeteroGraph(g.taxonomy, read.click_edges());
  return g;
}

HeteroGraph structure_graph(const RunConfig& c, const HeteroGraph& graph) {
  return c.use_click_graph ? graph : graph.without_clicks();
}

DatasetSplit load_dataset_stage(const RunConfig& c, const ConceptVocabulary& vocab) {
  const fs::path dir = stage_dir(c, Stage::MakeDataset);
  DatasetSplit split;
  split.seed = c.seed;
  for (auto [name, dst] : {std::pair{"train.jsonl", &split.train}, std::pair{"val.jsonl", &split.val},
                           std::pair{"test.jsonl", &split.test}}) {
    require_artifact(dir / name, Stage::MakeDataset);
    auto in = open_input(dir / name);
    *dst = read_pairs_jsonl(in, vocab);
  }
  return split;
}

void build_graph_stage(const RunConfig& c) {
  const fs::path dir = stage_dir(c, Stage::BuildGraph);
  ConceptVocabulary vocab = load_vocabulary(c.paths.vocab);
  const TaxonomyLoad load = load_taxonomy(c.paths.taxonomy, vocab);
  const auto log = load_click_log(c.paths.clicklog);
  const GraphBuild built = build_graph(load.taxonomy, vocab, log);
  write_file(dir / "vocab.txt", [&](std::ostream& o) { write_vocabulary(o, vocab); });
  write_file(dir / "taxonomy.tsv", [&](std::ostream& o) { write_taxonomy(o, load.taxonomy, vocab); });
  write_file(dir / "graph.tsv", [&](std::ostream& o) { write_graph(o, built.graph, vocab); });
  nlohmann::json stats = built.stats.to_json();
  stats["appended_concepts"] = load.appended;
  stats["duplicate_edges"] = load.duplicate_edges;
  write_file(dir / "stats.json", [&](std::ostream& o) { o << stats.dump(2) << '\n'; });
  write_manifest(c, Stage::BuildGraph,
                 {{"vocab", c.paths.vocab}, {"taxonomy", c.paths.taxonomy}, {"clicklog", c.paths.clicklog}},
                 {"vocab.txt", "taxonomy.tsv", "graph.tsv", "stats.json"});
  spdlog::info("build-graph: {} nodes, {} taxonomy edges, {} click edges", built.graph.nodes().size(),
               built.graph.taxo_edges().size(), built.graph.click_edges().size());
}

void make_dataset_stage(const RunConfig& c) {
  const GraphStage g = load_graph_stage(c);
  const fs::path dir = stage_dir(c, Stage::MakeDataset);
  const auto positives = balance_positives(g.taxonomy, g.vocab, g.graph, BalanceOptions{c.target_ratio, c.keep_prob, c.seed});
  const NegativeSampling negatives =
      sample_negatives(positives, g.taxonomy, g.graph, NegativeOptions{c.per_positive, c.shuffle_share, 100, c.seed});
  std::vector<LabeledPair> all = positives;
  all.insert(all.end(), negatives.negatives.begin(), negatives.negatives.end());
  const DatasetSplit split = split_dataset(all, c.seed);
  write_file(dir / "train.jsonl", [&](std::ostream& o) { write_pairs_jsonl(o, split.train, g.vocab); });
  write_file(dir / "val.jsonl", [&](std::ostream& o) { write_pairs_jsonl(o, split.val, g.vocab); });
  write_file(dir / "test.jsonl", [&](std::ostream& o) { write_pairs_jsonl(o, split.test, g.vocab); });
  nlohmann::json info = split_manifest(split);
  info["positives"] = positives.size();
  info["negatives"] = negatives.negatives.size();
  info["replace_fallbacks"] = negatives.replace_fallbacks;
  info["shortfall"] = negatives.shortfall;
  write_file(dir / "dataset.json", [&](std::ostream& o) { o << info.dump(2) << '\n'; });
  const fs::path graph_dir = stage_dir(c, Stage::BuildGraph);
  write_manifest(c, Stage::MakeDataset, {{"graph", graph_dir / "graph.tsv"}, {"taxonomy", graph_dir / "taxonomy.tsv"}},
                 {"train.jsonl", "val.jsonl", "test.jsonl", "dataset.json"});
  spdlog::info("make-dataset: {} positives, {} negatives ({} / {} / {})", positives.size(), negatives.negatives.size(),
               split.train.size(), split.val.size(), split.test.size());
}

std::unique_ptr<RelationEncoder> make_encoder(const RunConfig& c, const ConceptVocabulary& vocab,
                                              std::span<const std::string> corpus) {
  ProviderOptions opts;
  opts.provider = c.provider == "precomputed" ? "precomputed:" + c.paths.embeddings.string() : c.provider;
  opts.dim = c.relation_dim;
  opts.interaction = c.interaction;
  opts.seed = c.seed;
  return provider_select(opts, vocab, corpus);
}

void pretrain_stage(const RunConfig& c) {
  const GraphStage g = load_graph_stage(c);
  const fs::path dir = stage_dir(c, Stage::Pretrain);
  std::vector<std::string> corpus;
  if (!c.paths.corpus.empty()) corpus = read_lines(c.paths.corpus);
  auto encoder = make_encoder(c, g.vocab, corpus);
  nlohmann::json report;
  if (auto* reference = dynamic_cast<ReferenceEncoder*>(encoder.get())) {
    std::vector<TokenizedSentence> sentences;
    for (const auto& line : corpus) sentences.push_back(reference->tokenize(line, g.vocab));
    report["masking_losses"] = pretrain_concept_masking(*reference, sentences, c.masking);
  }
  const HeteroGraph structure = structure_graph(c, g.graph);
  NodeEmbeddings nodes = init_embeddings(structure, *encoder);
  const ContrastiveReport contrast = contrastive_pretrain(structure, nodes, c.contrastive);
  report["contrastive_losses"] = contrast.losses;
  report["isolated_nodes"] = contrast.isolated.size();

  nn::save_checkpoint(dir / "encoder", encoder->parameters(), nlohmann::json{{"encoder", encoder->describe()}});
  nn::ParameterXd table("structural.nodes", nodes.table);
  std::vector<nn::ParameterXd*> table_params{&table};
  nn::save_checkpoint(dir / "nodes", table_params, nlohmann::json{{"nodes", nodes.index.concepts()}});
  write_file(dir / "pretrain.json", [&](std::ostream& o) { o << report.dump(2) << '\n'; });
  std::vector<std::pair<std::string, fs::path>> inputs{{"graph", stage_dir(c, Stage::BuildGraph) / "graph.tsv"}};
  if (!c.paths.corpus.empty()) inputs.emplace_back("corpus", c.paths.corpus);
  if (c.provider == "precomputed") inputs.emplace_back("embeddings", c.paths.embeddings);
  write_manifest(c, Stage::Pretrain, inputs, {"encoder.bin", "encoder.json", "nodes.bin", "nodes.json", "pretrain.json"});
  spdlog::info("pretrain: {} nodes, final contrastive loss {:.5f}", nodes.index.size(),
               contrast.losses.empty() ? 0.0 : contrast.losses.back());
}

std::unique_ptr<RelationEncoder> load_encoder(const RunConfig& c) {
  const fs::path stem = stage_dir(c, Stage::Pretrain) / "encoder";
  require_artifact(stem.string() + ".json", Stage::Pretrain);
  auto encoder = encoder_from_description(nn::read_checkpoint_manifest(stem).at("extra").at("encoder"));
  const auto params = encoder->parameters();
  nn::load_checkpoint(stem, params);
  return encoder;
}

NodeEmbeddings load_nodes(const RunConfig& c, const HeteroGraph& structure) {
  const fs::path stem = stage_dir(c, Stage::Pretrain) / "nodes";
  require_artifact(stem.string() + ".json", Stage::Pretrain);
  NodeEmbeddings nodes{NodeIndex(structure.nodes()), {}};
  const nlohmann::json manifest = nn::read_checkpoint_manifest(stem);
  if (manifest.at("extra").at("nodes").get<std::vector<ConceptId>>() != nodes.index.concepts()) {
    throw Error(ErrorKind::ShapeMismatch, "pretrained node table does not match the graph");
  }
  const auto& entry = manifest.at("params").at(0);
  nn::ParameterXd table("structural.nodes",
                        nn::MatrixXd::Zero(entry.at("rows").get<Eigen::Index>(), entry.at("cols").get<Eigen::Index>()));
  std::vector<nn::ParameterXd*> params{&table};
  nn::load_checkpoint(stem, params);
  nodes.table = table.value;
  return nodes;
}

void train_stage(const RunConfig& c) {
  const GraphStage g = load_graph_stage(c);
  const DatasetSplit split = load_dataset_stage(c, g.vocab);
  const HeteroGraph structure = structure_graph(c, g.graph);
  auto encoder = load_encoder(c);
  NodeEmbeddings nodes = load_nodes(c, structure);
  TaxonomyModel model(std::move(encoder), structure, std::move(nodes), c.model);
  const TrainResult result = train(model, split, c.training);
  const fs::path dir = stage_dir(c, Stage::Train);
  model.save(dir / "model");
  write_file(dir / "history.json", [&](std::ostream& o) { o << result.to_json().dump(2) << '\n'; });
  const fs::path data = stage_dir(c, Stage::MakeDataset);
  const fs::path pre = stage_dir(c, Stage::Pretrain);
  write_manifest(c, Stage::Train,
                 {{"train", data / "train.jsonl"}, {"val", data / "val.jsonl"}, {"encoder", pre / "encoder.bin"},
                  {"nodes", pre / "nodes.bin"}},
                 {"model.bin", "model.json", "history.json"});
  spdlog::info("train: {} epochs, best epoch {}, val edge-f1 {:.4f}", result.history.size(), result.best_epoch,
               result.best_val_edge_f1);
}

std::unique_ptr<TaxonomyModel> load_model(const RunConfig& c, const HeteroGraph& structure) {
  const fs::path stem = stage_dir(c, Stage::Train) / "model";
  require_artifact(stem.string() + ".json", Stage::Train);
  return TaxonomyModel::load(stem, structure);
}

EdgeScorer model_scorer(TaxonomyModel& model) {
  return [&model](std::span<const Edge> pairs) { return model.positive_scores(pairs); };
}

void expand_stage(const RunConfig& c) {
  const GraphStage g = load_graph_stage(c);
  const HeteroGraph structure = structure_graph(c, g.graph);
  auto model = load_model(c, structure);
  const ExpansionResult result = expand_taxonomy(g.taxonomy, g.graph, model_scorer(*model), c.threshold, c.prune_all);
  const fs::path dir = stage_dir(c, Stage::Expand);
  write_file(dir / "taxonomy.tsv", [&](std::ostream& o) { write_taxonomy(o, result.expanded, g.vocab); });
  write_file(dir / "additions.jsonl", [&](std::ostream& o) { write_additions_jsonl(o, result, g.vocab); });
  write_file(dir / "expansion.json", [&](std::ostream& o) { o << result.summary().dump(2) << '\n'; });
  const fs::path stem = stage_dir(c, Stage::Train) / "model";
  write_manifest(c, Stage::Expand,
                 {{"model", stem.string() + ".bin"}, {"graph", stage_dir(c, Stage::BuildGraph) / "graph.tsv"}},
                 {"taxonomy.tsv", "additions.jsonl", "expansion.json"});
  spdlog::info("expand: {} edges added, {} pruned", result.added_edges().size(),
               result.added.size() - result.added_edges().size());
}

std::vector<Edge> edges_of(std::span<const LabeledPair> pairs) {
  std::vector<Edge> out;
  for (const auto& p : pairs) out.push_back(p.edge());
  return out;
}

std::vector<int> labels_of(std::span<const LabeledPair> pairs) {
  std::vector<int> out;
  for (const auto& p : pairs) out.push_back(p.label());
  return out;
}

EdgeScorer labels_as_scores(std::function<std::vector<int>(std::span<const Edge>)> fn) {
  return [fn = std::move(fn)](std::span<const Edge> pairs) {
    std::vector<double> out;
    for (int v : fn(pairs)) out.push_back(v);
    return out;
  };
}

void evaluate_stage(const RunConfig& c) {
  const GraphStage g = load_graph_stage(c);
  ConceptVocabulary vocab = g.vocab;
  const DatasetSplit split = load_dataset_stage(c, vocab);
  const HeteroGraph structure = structure_graph(c, g.graph);
  auto model = load_model(c, structure);
  require_artifact(stage_dir(c, Stage::Expand) / "taxonomy.tsv", Stage::Expand);
  const Taxonomy expanded = load_taxonomy(stage_dir(c, Stage::Expand) / "taxonomy.tsv", vocab).taxonomy;
  const Taxonomy gold_taxonomy = load_taxonomy(c.paths.gold_taxonomy, vocab).taxonomy;
  const Taxonomy gold_tax_edges = load_taxonomy(c.paths.gold_edges, vocab).taxonomy;
  const EdgeSet gold = gold_tax_edges.edges();
  if (vocab.size() != g.vocab.size()) {
    throw Error(ErrorKind::UnknownConcept, "gold files mention concepts outside the vocabulary");
  }
  const std::vector<Edge> test = edges_of(split.test);

  RunTable runs;
  auto add_run = [&](const std::string& name, const std::vector<int>& test_labels, const Taxonomy& result_taxonomy) {
    Metrics m;
    score_pairs(split.test, test_labels, m);
    EdgeSet added;
    for (const Edge& e : result_taxonomy.edges()) {
      if (!g.taxonomy.has_edge(e)) added.insert(e);
    }
    score_expansion(added, g.taxonomy, result_taxonomy, gold, gold_taxonomy, m);
    runs[name] = m;
  };

  {
    std::vector<int> labels;
    for (double s : model->positive_scores(test)) labels.push_back(s >= c.threshold ? 1 : 0);
    add_run("model", labels, expanded);
  }
  {
    auto fn = [&](std::span<const Edge> pairs) { return baseline_substr(pairs, g.vocab); };
    const auto result = expand_taxonomy(g.taxonomy, g.graph, labels_as_scores(fn), 0.5, c.prune_all);
    add_run("substr", fn(test), result.expanded);
  }
  {
    Rng rng = make_rng(c.seed, "baseline.random.expand");
    auto fn = [&](std::span<const Edge> pairs) {
      std::vector<int> out;
      for (std::size_t k = 0; k < pairs.size(); ++k) out.push_back(static_cast<int>(rng() >> 63));
      return out;
    };
    const auto result = expand_taxonomy(g.taxonomy, g.graph, labels_as_scores(fn), 0.5, c.prune_all);
    add_run("random", baseline_random(test, c.seed), result.expanded);
  }
  {
    ConceptVectors vectors;
    RelationEncoder& encoder = model->encoder();
    for (const auto& concept_entry : g.vocab.concepts()) {
      if (encoder.knows(concept_entry.id)) vectors[concept_entry.id] = encoder.encode_concept(concept_entry.id);
    }
    const std::vector<Edge> val = edges_of(split.val.empty() ? split.train : split.val);
    const std::vector<int> val_labels = labels_of(split.val.empty() ? split.train : split.val);
    const double t = tune_distance_threshold(neighbor_distances(val, g.taxonomy, vectors), val_labels);
    auto fn = [&](std::span<const Edge> pairs) { return baseline_distance_neighbor(pairs, g.taxonomy, vectors, t); };
    const auto result = expand_taxonomy(g.taxonomy, g.graph, labels_as_scores(fn), 0.5, c.prune_all);
    add_run("distance_neighbor", fn(test), result.expanded);
  }

  compare_report(c.out, runs);
  fs::create_directories(stage_dir(c, Stage::Evaluate));
  fs::copy_file(c.out / "report.json", stage_dir(c, Stage::Evaluate) / "report.json",
                fs::copy_options::overwrite_existing);
  fs::copy_file(c.out / "report.txt", stage_dir(c, Stage::Evaluate) / "report.txt",
                fs::copy_options::overwrite_existing);
  const fs::path data = stage_dir(c, Stage::MakeDataset);
  write_manifest(c, Stage::Evaluate,
                 {{"test", data / "test.jsonl"},
                  {"expanded", stage_dir(c, Stage::Expand) / "taxonomy.tsv"},
                  {"model", stage_dir(c, Stage::Train) / "model.bin"},
                  {"gold_edges", c.paths.gold_edges},
                  {"gold_taxonomy", c.paths.gold_taxonomy}},
                 {"report.json", "report.txt"});
  spdlog::info("evaluate: model acc {:.4f} edge-f1 {:.4f}; substr edge-f1 {:.4f}", runs["model"].accuracy,
               runs["model"].edge.f1, runs["substr"].edge.f1);
}

void synth_stage(const RunConfig& c) {
  const SynthBenchmark bench = synth_benchmark(c.synth);
  write_benchmark(c.synth_dir, bench);
  spdlog::info("synth: {} concepts, {} gold edges written to {}", bench.vocab.size(), bench.gold.size(),
               c.synth_dir.generic_string());
}

}  // namespace

void run_stage(Stage stage, const RunConfig& config) {
  config.validate(stage);
  switch (stage) {
    case Stage::BuildGraph:
      build_graph_stage(config);
      break;
    case Stage::MakeDataset:
      make_dataset_stage(config);
      break;
    case Stage::Pretrain:
      pretrain_stage(config);
      break;
    case Stage::Train:
      train_stage(config);
      break;
    case Stage::Expand:
      expand_stage(config);
      break;
    case Stage::Evaluate:
      evaluate_stage(config);
      break;
    case Stage::Synth:
      synth_stage(config);
      break;
    case Stage::All:
      for (Stage s : {Stage::BuildGraph, Stage::MakeDataset, Stage::Pretrain, Stage::Train, Stage::Expand}) {
        run_stage(s, config);
      }
      if (!config.paths.gold_edges.empty()) run_stage(Stage::Evaluate, config);
      break;
  }
}

}  // namespace taxograft
