#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxograft/click_graph.hpp"
#include "taxograft/taxonomy.hpp"

namespace taxograft {

// Positive-class scores for a batch of (query, item) candidates.
using EdgeScorer = std::function<std::vector<double>(std::span<const Edge>)>;

struct AddedEdge {
  Edge edge;
  double score = 0.0;
  int level = 0;
  bool pruned = false;
};

struct LevelLog {
  int level = 0;
  std::size_t frontier = 0;
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::size_t cycle_rejected = 0;
};

struct ExpansionResult {
  Taxonomy expanded;
  std::vector<AddedEdge> added;     // attachment order; pruned ones flagged
  std::vector<AddedEdge> rejected;  // accepted by the scorer but would close a cycle
  std::vector<LevelLog> levels;

  EdgeSet added_edges() const;  // surviving additions
  nlohmann::json summary() const;
};

// One top-down level-order pass. Candidates of q are its click items that are
// not yet descendants of q; accepted items become children of q and join the
// next frontier. Redundant added edges are then pruned (all redundant edges
// when `prune_all`).
ExpansionResult expand_taxonomy(const Taxonomy& taxonomy, const HeteroGraph& graph, const EdgeScorer& scorer,
                                double threshold = 0.5, bool prune_all = false);

// Drops every edge (a, c) with another path a -> ... -> c.
Taxonomy transitive_reduce(const Taxonomy& taxonomy);

// {"parent","child","score","level","pruned"} per line.
void write_additions_jsonl(std::ostream& out, const ExpansionResult& result, const ConceptVocabulary& vocab);

}  // namespace taxograft
