#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "taxograft/vocabulary.hpp"

namespace taxograft {

struct Edge {
  ConceptId parent = 0;
  ConceptId child = 0;

  auto operator<=>(const Edge&) const = default;
};

using EdgeSet = std::set<Edge>;

// Directed hypernym -> hyponym edge set. Mutators do not check acyclicity;
// callers that need the guarantee use find_cycle() or would_create_cycle().
class Taxonomy {
 public:
  void add_node(ConceptId node);
  // Returns false when the edge was already present. Self-loops are rejected.
  bool add_edge(ConceptId parent, ConceptId child);
  bool add_edge(const Edge& e) { return add_edge(e.parent, e.child); }
  bool remove_edge(const Edge& e);

  bool has_node(ConceptId node) const { return nodes_.count(node) > 0; }
  bool has_edge(const Edge& e) const { return edges_.count(e) > 0; }

  const std::set<ConceptId>& nodes() const noexcept { return nodes_; }
  const EdgeSet& edges() const noexcept { return edges_; }
  const std::set<ConceptId>& children(ConceptId node) const;
  const std::set<ConceptId>& parents(ConceptId node) const;

  std::vector<ConceptId> roots() const;
  std::set<ConceptId> descendants(ConceptId node) const;
  std::set<ConceptId> ancestors(ConceptId node) const;
  bool reaches(ConceptId from, ConceptId to) const;
  bool would_create_cycle(const Edge& e) const { return e.parent == e.child || reaches(e.child, e.parent); }

  // A witness path v0 -> v1 -> ... -> v0 when the edge set has a cycle.
  std::optional<std::vector<ConceptId>> find_cycle() const;

  // All (ancestor, descendant) pairs.
  EdgeSet closure() const;

  // Nodes grouped by shortest distance from a root (level 0 = roots).
  std::vector<std::vector<ConceptId>> levels() const;

 private:
  std::set<ConceptId> nodes_;
  EdgeSet edges_;
  std::map<ConceptId, std::set<ConceptId>> children_;
  std::map<ConceptId, std::set<ConceptId>> parents_;
};

}  // namespace taxograft
