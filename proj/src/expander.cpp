#include "taxograft/expander.hpp"

#include <algorithm>
#include <ostream>

#include "taxograft/error.hpp"
#include "taxograft/model.hpp"

namespace taxograft {

namespace {

bool redundant(const Taxonomy& t, const Edge& e) {
  for (ConceptId mid : t.children(e.parent)) {
    if (mid != e.child && t.reaches(mid, e.child)) return true;
  }
  return false;
}

}  // namespace

EdgeSet ExpansionResult::added_edges() const {
  EdgeSet out;
  for (const auto& a : added) {
    if (!a.pruned) out.insert(a.edge);
  }
  return out;
}

nlohmann::json ExpansionResult::summary() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& l : levels) {
    rows.push_back({{"level", l.level},
                    {"frontier", l.frontier},
                    {"candidates", l.candidates},
                    {"accepted", l.accepted},
                    {"cycle_rejected", l.cycle_rejected}});
  }
  std::size_t pruned = 0;
  for (const auto& a : added) pruned += a.pruned ? 1 : 0;
  return nlohmann::json{{"added", added.size() - pruned},
                        {"pruned", pruned},
                        {"cycle_rejected", rejected.size()},
                        {"nodes", expanded.nodes().size()},
                        {"edges", expanded.edges().size()},
                        {"levels", rows}};
}

ExpansionResult expand_taxonomy(const Taxonomy& taxonomy, const HeteroGraph& graph, const EdgeScorer& scorer,
                                double threshold, bool prune_all) {
  validate_threshold(threshold);
  ExpansionResult result;
  result.expanded = taxonomy;
  Taxonomy& t = result.expanded;

  std::set<ConceptId> visited;
  std::vector<ConceptId> frontier = t.roots();
  for (int level = 0; !frontier.empty(); ++level) {
    for (ConceptId q : frontier) visited.insert(q);
    LevelLog log;
    log.level = level;
    log.frontier = frontier.size();

    std::vector<Edge> candidates;
    for (ConceptId q : frontier) {
      const std::set<ConceptId> below = t.descendants(q);
      for (ConceptId i : graph.click_items(q)) {
        if (i != q && below.count(i) == 0) candidates.push_back(Edge{q, i});
      }
    }
    log.candidates = candidates.size();

    std::vector<AddedEdge> accepted;
    if (!candidates.empty()) {
      const std::vector<double> scores = scorer(candidates);
      if (scores.size() != candidates.size()) throw Error(ErrorKind::ShapeMismatch, "scorer returned wrong count");
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (scores[k] >= threshold) accepted.push_back(AddedEdge{candidates[k], scores[k], level, false});
      }
    }
    std::sort(accepted.begin(), accepted.end(), [](const AddedEdge& a, const AddedEdge& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.edge < b.edge;
    });
    for (const AddedEdge& a : accepted) {
      if (t.has_edge(a.edge) || t.reaches(a.edge.parent, a.edge.child)) continue;
      if (t.would_create_cycle(a.edge)) {
        result.rejected.push_back(a);
        ++log.cycle_rejected;
        continue;
      }
      t.add_edge(a.edge);
      result.added.push_back(a);
      ++log.accepted;
    }
    result.levels.push_back(log);

    std::set<ConceptId> next;
    for (ConceptId q : frontier) {
      for (ConceptId c : t.children(q)) {
        if (visited.count(c) == 0) next.insert(c);
      }
    }
    frontier.assign(next.begin(), next.end());
  }

  if (prune_all) {
    const Taxonomy reduced = transitive_reduce(t);
    for (auto& a : result.added) a.pruned = !reduced.has_edge(a.edge);
    t = reduced;
  } else {
    for (auto& a : result.added) {
      if (redundant(t, a.edge)) {
        t.remove_edge(a.edge);
        a.pruned = true;
      }
    }
  }
  return result;
}

Taxonomy transitive_reduce(const Taxonomy& taxonomy) {
  if (auto cycle = taxonomy.find_cycle()) throw Error(ErrorKind::CycleDetected, "cannot reduce a cyclic taxonomy");
  Taxonomy out = taxonomy;
  for (const Edge& e : taxonomy.edges()) {
    if (redundant(out, e)) out.remove_edge(e);
  }
  return out;
}

void write_additions_jsonl(std::ostream& out, const ExpansionResult& result, const ConceptVocabulary& vocab) {
  for (const auto& a : result.added) {
    const nlohmann::json row{{"parent", vocab.surface(a.edge.parent)},
                             {"child", vocab.surface(a.edge.child)},
                             {"score", a.score},
                             {"level", a.level},
                             {"pruned", a.pruned}};
    out << row.dump() << '\n';
  }
}

}  // namespace taxograft
