#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxograft/corpus_io.hpp"
#include "taxograft/taxonomy.hpp"

namespace taxograft {

struct ItemClicks {
  std::string item_text;
  std::int64_t count = 0;
};

using CollectedItems = std::map<ConceptId, std::vector<ItemClicks>>;

struct ClickTriple {
  ConceptId query = 0;
  ConceptId item = 0;
  std::int64_t count = 0;

  bool operator==(const ClickTriple&) const = default;
};

struct IdentifiedItems {
  std::vector<ClickTriple> triples;  // sorted by (query, item), one per pair
  std::int64_t unresolved_clicks = 0;
  std::int64_t self_loop_clicks = 0;
};

struct ClickEdge {
  ConceptId query_concept = 0;
  ConceptId item_concept = 0;
  std::int64_t clicks = 0;
  double weight = 0.0;
};

using PairScores = std::map<std::pair<ConceptId, ConceptId>, double>;

// Keeps log records whose query is exactly (after normalization) the surface
// of a taxonomy node.
CollectedItems collect_items(const Taxonomy& taxonomy, const ConceptVocabulary& vocab,
                             std::span<const ClickRecord> log);

IdentifiedItems identify_items(const CollectedItems& collected, const ConceptMatcher& matcher);

// IF(q, i) = count(q, i) / sum_k count(q, k)
PairScores compute_if(std::span<const ClickTriple> triples);

// IQF(i) = ln(|queries| / |{q : q -> i}|)
std::map<ConceptId, double> compute_iqf(std::span<const ClickTriple> triples);

// weight(q, .) = softmax over the items of q of IF(q, i) * IQF(i)^2
std::vector<ClickEdge> assign_weights(std::span<const ClickTriple> triples, const PairScores& item_frequency,
                                      const std::map<ConceptId, double>& inverse_query_frequency);

// Taxonomy edges (weight 1) plus weighted click edges. Both kinds may connect
// the same pair; the undirected adjacency sums their weights.
class HeteroGraph {
 public:
  HeteroGraph() = default;
  HeteroGraph(const Taxonomy& taxonomy, std::vector<ClickEdge> click_edges);

  const std::set<ConceptId>& nodes() const noexcept { return nodes_; }
  const EdgeSet& taxo_edges() const noexcept { return taxo_edges_; }
  const std::vector<ClickEdge>& click_edges() const noexcept { return click_edges_; }

  bool has_click_edge(ConceptId query, ConceptId item) const;
  // Item concepts clicked under a query, ascending by id.
  std::vector<ConceptId> click_items(ConceptId query) const;
  // Concepts that appear on either side of a click edge.
  std::set<ConceptId> click_concepts() const;

  // Undirected view with combined weights, self-loops excluded.
  const std::map<ConceptId, double>& neighbors(ConceptId node) const;

  // Same graph with the click edges removed (taxonomy-only view).
  HeteroGraph without_clicks() const;

 private:
  std::set<ConceptId> nodes_;
  EdgeSet taxo_edges_;
  std::vector<ClickEdge> click_edges_;
  std::map<std::pair<ConceptId, ConceptId>, std::size_t> click_index_;
  std::map<ConceptId, std::map<ConceptId, double>> adjacency_;
};

struct GraphStats {
  std::int64_t items = 0;             // #Items: retained query-item click records (clicks)
  std::int64_t covered_nodes = 0;     // #Nodes: taxonomy nodes with clicked items
  double node_coverage = 0.0;         // CNode
  std::int64_t taxonomy_pair_clicks = 0;  // #IEdge
  std::int64_t covered_edges = 0;     // #Edges
  double edge_coverage = 0.0;         // CEdge
  std::int64_t new_concepts = 0;      // #Concepts
  std::int64_t new_pair_clicks = 0;   // #INewEdge
  std::int64_t new_edges = 0;         // #NewEdge
  std::int64_t unresolved_clicks = 0; // #IOthers
  std::int64_t taxonomy_nodes = 0;
  std::int64_t taxonomy_edges = 0;
  std::int64_t click_edges = 0;

  nlohmann::json to_json() const;
};

struct GraphBuild {
  HeteroGraph graph;
  GraphStats stats;
};

GraphBuild build_graph(const Taxonomy& taxonomy, const ConceptVocabulary& vocab, std::span<const ClickRecord> log);

// TSV `kind<TAB>src<TAB>dst<TAB>weight`, kind in {taxo, click}. Click counts
// are not serialized; edges read back carry clicks = 1.
void write_graph(std::ostream& out, const HeteroGraph& graph, const ConceptVocabulary& vocab);
HeteroGraph read_graph(std::istream& in, const ConceptVocabulary& vocab);

}  // namespace taxograft
