#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxograft/click_graph.hpp"
#include "taxograft/taxonomy.hpp"

namespace taxograft {

// Positives carry a pattern (headword / other); negatives a construction type
// (shuffle / replace). One enum keeps the two mutually exclusive.
enum class PairKind { Headword, Other, Shuffle, Replace };

std::string_view to_string(PairKind kind) noexcept;

struct LabeledPair {
  ConceptId query = 0;
  ConceptId item = 0;
  PairKind kind = PairKind::Other;

  bool positive() const noexcept { return kind == PairKind::Headword || kind == PairKind::Other; }
  int label() const noexcept { return positive() ? 1 : 0; }
  Edge edge() const noexcept { return Edge{query, item}; }

  bool operator==(const LabeledPair&) const = default;
};

struct DatasetSplit {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> val;
  std::vector<LabeledPair> test;
  std::uint64_t seed = 0;
};

// True iff the parent surface is the head of the child surface: a token-aligned
// suffix when the child contains spaces, otherwise a proper character suffix.
bool detect_headword(std::string_view parent, std::string_view child);

struct BalanceOptions {
  double target_ratio = 0.3;  // headword share among positives
  double keep_prob = 1.0;     // chance a clicked headword edge is a candidate
  std::uint64_t seed = 0;
};

std::vector<LabeledPair> balance_positives(const Taxonomy& taxonomy, const ConceptVocabulary& vocab,
                                           const HeteroGraph& graph, const BalanceOptions& options);

struct NegativeOptions {
  int per_positive = 1;
  double shuffle_share = 0.5;
  int max_replace_tries = 100;
  std::uint64_t seed = 0;
};

struct NegativeSampling {
  std::vector<LabeledPair> negatives;
  std::size_t replace_fallbacks = 0;  // replace draws that fell back to shuffle
  std::size_t shortfall = 0;          // negatives that could not be produced
};

// `taxonomy` is the full existing taxonomy: its node set is the filtered
// taxonomy's node set and its closure drives the ancestor/descendant exclusion.
NegativeSampling sample_negatives(std::span<const LabeledPair> positives, const Taxonomy& taxonomy,
                                  const HeteroGraph& graph, const NegativeOptions& options);

// Stratified by PairKind: each stratum contributes round(0.6 n) / round(0.2 n) /
// rest to train / val / test.
DatasetSplit split_dataset(std::span<const LabeledPair> pairs, std::uint64_t seed);

// JSONL rows {"query","item","label","pattern","neg_type"} with surfaces.
void write_pairs_jsonl(std::ostream& out, std::span<const LabeledPair> pairs, const ConceptVocabulary& vocab);
std::vector<LabeledPair> read_pairs_jsonl(std::istream& in, const ConceptVocabulary& vocab);

nlohmann::json split_manifest(const DatasetSplit& split);

}  // namespace taxograft
