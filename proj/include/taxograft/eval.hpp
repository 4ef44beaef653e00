#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxograft/corpus_io.hpp"
#include "taxograft/metrics.hpp"
#include "taxograft/nn.hpp"
#include "taxograft/selfsup.hpp"
#include "taxograft/taxonomy.hpp"

namespace taxograft {

// ---- baselines ------------------------------------------------------------

// Seeded fair coin per candidate.
std::vector<int> baseline_random(std::span<const Edge> candidates, std::uint64_t seed);

// Positive iff the query surface occurs inside the item surface.
std::vector<int> baseline_substr(std::span<const Edge> candidates, const ConceptVocabulary& vocab);

using ConceptVectors = std::map<ConceptId, nn::RowVectorXd>;

// Mean cosine distance from i to {q} ∪ children(q).
std::vector<double> neighbor_distances(std::span<const Edge> candidates, const Taxonomy& taxonomy,
                                       const ConceptVectors& vectors);
std::vector<int> baseline_distance_neighbor(std::span<const Edge> candidates, const Taxonomy& taxonomy,
                                            const ConceptVectors& vectors, double threshold);

// Threshold t maximizing Edge-F1 of {distance < t} on labeled pairs; ties go to
// the smaller t. Candidate thresholds sit between consecutive distances.
double tune_distance_threshold(std::span<const double> distances, std::span<const int> labels);

// ---- synthetic benchmark --------------------------------------------------

struct SynthSpec {
  int n_concepts = 200;
  int depth = 3;
  double headword_fraction = 0.7;
  double noise_intention_drift = 0.1;
  double noise_common_item = 0.05;
  int clicks_per_edge = 10;
  std::uint64_t seed = 42;
  double gold_fraction = 0.35;        // share of bottom-level nodes withheld as gold
  double existing_click_rate = 0.8;   // share of kept edges that receive clicks
  int sentences_per_edge = 3;
  int fillers_per_sentence = 4;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

struct SynthBenchmark {
  ConceptVocabulary vocab;
  Taxonomy taxonomy;       // input taxonomy, gold edges withheld
  Taxonomy full;           // input plus gold edges
  EdgeSet gold;            // withheld edges
  EdgeSet gold_headword;   // gold edges formed as modifier + parent compounds
  std::vector<ClickRecord> clicks;
  std::vector<std::string> corpus;
  ConceptId universal = 0; // item clicked under many queries
  nlohmann::json stats;
};

SynthBenchmark synth_benchmark(const SynthSpec& spec);

// Files: vocab.txt taxonomy.tsv clicklog.tsv corpus.txt gold_edges.tsv
// gold_taxonomy.tsv synth.json
void write_benchmark(const std::filesystem::path& dir, const SynthBenchmark& bench);

// ---- reports ----------------------------------------------------------------

// Accuracy over labeled pairs plus accuracy per pair kind.
void score_pairs(std::span<const LabeledPair> pairs, std::span<const int> predicted, Metrics& out);

// Edge PRF of `added` against `gold`; ancestor PRF over the ancestor pairs that
// are new relative to `original`.
void score_expansion(const EdgeSet& added, const Taxonomy& original, const Taxonomy& expanded, const EdgeSet& gold,
                     const Taxonomy& gold_taxonomy, Metrics& out);

using RunTable = std::map<std::string, Metrics>;

nlohmann::json report_json(const RunTable& runs);
std::string report_text(const RunTable& runs);
// report.json and report.txt under `dir`.
void compare_report(const std::filesystem::path& dir, const RunTable& runs);

}  // namespace taxograft
