#include "taxograft/click_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <tuple>
#include <ostream>
#include <set>

#include "taxograft/error.hpp"
#include "taxograft/text.hpp"

namespace taxograft {

CollectedItems collect_items(const Taxonomy& taxonomy, const ConceptVocabulary& vocab,
                             std::span<const ClickRecord> log) {
  CollectedItems collected;
  for (const ClickRecord& r : log) {
    auto id = vocab.find_normalized(normalize_text(r.query));
    if (!id || !taxonomy.has_node(*id)) continue;
    collected[*id].push_back(ItemClicks{normalize_text(r.item_text), r.count});
  }
  return collected;
}

IdentifiedItems identify_items(const CollectedItems& collected, const ConceptMatcher& matcher) {
  IdentifiedItems out;
  std::map<std::pair<ConceptId, ConceptId>, std::int64_t> merged;
  for (const auto& [query, items] : collected) {
    for (const ItemClicks& item : items) {
      auto id = matcher.match(item.item_text);
      if (!id) {
        out.unresolved_clicks += item.count;
        continue;
      }
      if (*id == query) {
        out.self_loop_clicks += item.count;
        continue;
      }
      merged[{query, *id}] += item.count;
    }
  }
  out.triples.reserve(merged.size());
  for (const auto& [key, count] : merged) out.triples.push_back(ClickTriple{key.first, key.second, count});
  return out;
}

PairScores compute_if(std::span<const ClickTriple> triples) {
  std::map<ConceptId, std::int64_t> totals;
  for (const auto& t : triples) totals[t.query] += t.count;
  PairScores out;
  for (const auto& t : triples) {
    out[{t.query, t.item}] += static_cast<double>(t.count) / static_cast<double>(totals[t.query]);
  }
  return out;
}

std::map<ConceptId, double> compute_iqf(std::span<const ClickTriple> triples) {
  std::set<ConceptId> queries;
  std::map<ConceptId, std::set<ConceptId>> clicked_by;
  for (const auto& t : triples) {
    queries.insert(t.query);
    clicked_by[t.item].insert(t.query);
  }
  const double total = static_cast<double>(queries.size());
  std::map<ConceptId, double> out;
  for (const auto& [item, qs] : clicked_by) {
    out[item] = std::log(total / static_cast<double>(qs.size()));
  }
  return out;
}

std::vector<ClickEdge> assign_weights(std::span<const ClickTriple> triples, const PairScores& item_frequency,
                                      const std::map<ConceptId, double>& inverse_query_frequency) {
  std::map<ConceptId, std::vector<ClickEdge>> by_query;
  for (const auto& t : triples) {
    const double iqf = inverse_query_frequency.at(t.item);
    const double score = item_frequency.at({t.query, t.item}) * iqf * iqf;
    by_query[t.query].push_back(ClickEdge{t.query, t.item, t.count, score});
  }
  std::vector<ClickEdge> out;
  out.reserve(triples.size());
  for (auto& [query, edges] : by_query) {
    double max_score = -std::numeric_limits<double>::infinity();
    for (const auto& e : edges) max_score = std::max(max_score, e.weight);
    double z = 0.0;
    for (auto& e : edges) {
      e.weight = std::exp(e.weight - max_score);
      z += e.weight;
    }
    std::sort(edges.begin(), edges.end(),
              [](const ClickEdge& a, const ClickEdge& b) { return a.item_concept < b.item_concept; });
    for (auto& e : edges) {
      e.weight /= z;
      out.push_back(e);
    }
  }
  return out;
}

HeteroGraph::HeteroGraph(const Taxonomy& taxonomy, std::vector<ClickEdge> click_edges)
    : nodes_(taxonomy.nodes()), taxo_edges_(taxonomy.edges()), click_edges_(std::move(click_edges)) {
  std::sort(click_edges_.begin(), click_edges_.end(), [](const ClickEdge& a, const ClickEdge& b) {
    return std::tie(a.query_concept, a.item_concept) < std::tie(b.query_concept, b.item_concept);
  });
  auto link = [&](ConceptId u, ConceptId v, double w) {
    adjacency_[u][v] += w;
    adjacency_[v][u] += w;
  };
  for (const Edge& e : taxo_edges_) link(e.parent, e.child, 1.0);
  for (std::size_t k = 0; k < click_edges_.size(); ++k) {
    const ClickEdge& e = click_edges_[k];
    if (e.query_concept == e.item_concept) {
      throw Error(ErrorKind::MalformedLine, "self-loop click edge on concept " + std::to_string(e.query_concept));
    }
    click_index_[{e.query_concept, e.item_concept}] = k;
    nodes_.insert(e.query_concept);
    nodes_.insert(e.item_concept);
    link(e.query_concept, e.item_concept, e.weight);
  }
}

bool HeteroGraph::has_click_edge(ConceptId query, ConceptId item) const {
  return click_index_.count({query, item}) > 0;
}

std::vector<ConceptId> HeteroGraph::click_items(ConceptId query) const {
  std::vector<ConceptId> out;
  for (auto it = click_index_.lower_bound({query, std::numeric_limits<ConceptId>::min()});
       it != click_index_.end() && it->first.first == query; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

std::set<ConceptId> HeteroGraph::click_concepts() const {
  std::set<ConceptId> out;
  for (const auto& e : click_edges_) {
    out.insert(e.query_concept);
    out.insert(e.item_concept);
  }
  return out;
}

const std::map<ConceptId, double>& HeteroGraph::neighbors(ConceptId node) const {
  static const std::map<ConceptId, double> kEmpty;
  auto it = adjacency_.find(node);
  return it == adjacency_.end() ? kEmpty : it->second;
}

HeteroGraph HeteroGraph::without_clicks() const {
  Taxonomy taxonomy;
  for (ConceptId n : nodes_) taxonomy.add_node(n);
  for (const Edge& e : taxo_edges_) taxonomy.add_edge(e);
  return HeteroGraph(taxonomy, {});
}

nlohmann::json GraphStats::to_json() const {
  return nlohmann::json{
      {"items", items},
      {"nodes", covered_nodes},
      {"cnode", node_coverage},
      {"iedge", taxonomy_pair_clicks},
      {"edges", covered_edges},
      {"cedge", edge_coverage},
      {"concepts", new_concepts},
      {"inewedge", new_pair_clicks},
      {"newedge", new_edges},
      {"iothers", unresolved_clicks},
      {"taxonomy_nodes", taxonomy_nodes},
      {"taxonomy_edges", taxonomy_edges},
      {"click_edges", click_edges},
  };
}

GraphBuild build_graph(const Taxonomy& taxonomy, const ConceptVocabulary& vocab, std::span<const ClickRecord> log) {
  const CollectedItems collected = collect_items(taxonomy, vocab, log);
  const IdentifiedItems identified = identify_items(collected, ConceptMatcher(vocab));
  const auto& triples = identified.triples;
  auto weights = assign_weights(triples, compute_if(triples), compute_iqf(triples));

  GraphStats stats;
  for (const auto& [query, items] : collected) {
    for (const auto& item : items) stats.items += item.count;
  }
  stats.covered_nodes = static_cast<std::int64_t>(collected.size());
  stats.taxonomy_nodes = static_cast<std::int64_t>(taxonomy.nodes().size());
  stats.taxonomy_edges = static_cast<std::int64_t>(taxonomy.edges().size());
  stats.node_coverage = stats.taxonomy_nodes == 0 ? 0.0
                                                  : static_cast<double>(stats.covered_nodes) /
                                                        static_cast<double>(stats.taxonomy_nodes);
  std::set<ConceptId> new_concepts;
  for (const auto& t : triples) {
    if (taxonomy.has_edge(Edge{t.query, t.item})) {
      stats.taxonomy_pair_clicks += t.count;
      ++stats.covered_edges;
    } else {
      stats.new_pair_clicks += t.count;
      ++stats.new_edges;
    }
    if (!taxonomy.has_node(t.item)) new_concepts.insert(t.item);
  }
  stats.edge_coverage = stats.taxonomy_edges == 0 ? 0.0
                                                  : static_cast<double>(stats.covered_edges) /
                                                        static_cast<double>(stats.taxonomy_edges);
  stats.new_concepts = static_cast<std::int64_t>(new_concepts.size());
  stats.unresolved_clicks = identified.unresolved_clicks;
  stats.click_edges = static_cast<std::int64_t>(weights.size());

  return GraphBuild{HeteroGraph(taxonomy, std::move(weights)), stats};
}

void write_graph(std::ostream& out, const HeteroGraph& graph, const ConceptVocabulary& vocab) {
  char buf[64];
  for (const Edge& e : graph.taxo_edges()) {
    out << "taxo\t" << vocab.surface(e.parent) << '\t' << vocab.surface(e.child) << "\t1\n";
  }
  for (const ClickEdge& e : graph.click_edges()) {
    auto res = std::to_chars(buf, buf + sizeof(buf), e.weight);
    out << "click\t" << vocab.surface(e.query_concept) << '\t' << vocab.surface(e.item_concept) << '\t'
        << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
  }
}

HeteroGraph read_graph(std::istream& in, const ConceptVocabulary& vocab) {
  Taxonomy taxonomy;
  std::vector<ClickEdge> clicks;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4) throw Error(ErrorKind::MalformedLine, at_line("expected kind<TAB>src<TAB>dst<TAB>weight", number));
    auto src = vocab.find(fields[1]);
    auto dst = vocab.find(fields[2]);
    if (!src || !dst) throw Error(ErrorKind::UnknownConcept, at_line("graph endpoint not in vocabulary", number));
    double weight = 0.0;
    auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), weight);
    if (ec != std::errc() || ptr != fields[3].data() + fields[3].size()) {
      throw Error(ErrorKind::MalformedLine, at_line("bad weight", number));
    }
    if (fields[0] == "taxo") {
      taxonomy.add_edge(*src, *dst);
    } else if (fields[0] == "click") {
      clicks.push_back(ClickEdge{*src, *dst, 1, weight});
    } else {
      throw Error(ErrorKind::MalformedLine, at_line("unknown edge kind", number));
    }
  }
  return HeteroGraph(taxonomy, std::move(clicks));
}

}  // namespace taxograft
