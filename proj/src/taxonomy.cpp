#include "taxograft/taxonomy.hpp"

#include <algorithm>
#include <deque>

#include "taxograft/error.hpp"

namespace taxograft {
namespace {

const std::set<ConceptId>& empty_set() {
  static const std::set<ConceptId> kEmpty;
  return kEmpty;
}

template <typename Adjacency>
std::set<ConceptId> reachable(const Adjacency& adj, ConceptId start) {
  std::set<ConceptId> seen;
  std::vector<ConceptId> stack{start};
  while (!stack.empty()) {
    ConceptId u = stack.back();
    stack.pop_back();
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (ConceptId v : it->second) {
      if (seen.insert(v).second) stack.push_back(v);
    }
  }
  return seen;
}

}  // namespace

void Taxonomy::add_node(ConceptId node) { nodes_.insert(node); }

bool Taxonomy::add_edge(ConceptId parent, ConceptId child) {
  if (parent == child) {
    throw Error(ErrorKind::CycleDetected, "self-loop edge on concept " + std::to_string(parent));
  }
  nodes_.insert(parent);
  nodes_.insert(child);
  if (!edges_.insert(Edge{parent, child}).second) return false;
  children_[parent].insert(child);
  parents_[child].insert(parent);
  return true;
}

bool Taxonomy::remove_edge(const Edge& e) {
  if (edges_.erase(e) == 0) return false;
  children_[e.parent].erase(e.child);
  parents_[e.child].erase(e.parent);
  return true;
}

const std::set<ConceptId>& Taxonomy::children(ConceptId node) const {
  auto it = children_.find(node);
  return it == children_.end() ? empty_set() : it->second;
}

const std::set<ConceptId>& Taxonomy::parents(ConceptId node) const {
  auto it = parents_.find(node);
  return it == parents_.end() ? empty_set() : it->second;
}

std::vector<ConceptId> Taxonomy::roots() const {
  std::vector<ConceptId> out;
  for (ConceptId n : nodes_) {
    if (parents(n).empty()) out.push_back(n);
  }
  return out;
}

std::set<ConceptId> Taxonomy::descendants(ConceptId node) const { return reachable(children_, node); }

std::set<ConceptId> Taxonomy::ancestors(ConceptId node) const { return reachable(parents_, node); }

bool Taxonomy::reaches(ConceptId from, ConceptId to) const {
  if (from == to) return true;
  std::set<ConceptId> seen{from};
  std::vector<ConceptId> stack{from};
  while (!stack.empty()) {
    ConceptId u = stack.back();
    stack.pop_back();
    for (ConceptId v : children(u)) {
      if (v == to) return true;
      if (seen.insert(v).second) stack.push_back(v);
    }
  }
  return false;
}

std::optional<std::vector<ConceptId>> Taxonomy::find_cycle() const {
  enum class Mark { White, Grey, Black };
  std::map<ConceptId, Mark> mark;
  std::map<ConceptId, ConceptId> via;
  for (ConceptId start : nodes_) {
    if (mark[start] != Mark::White) continue;
    // Iterative DFS keeping an explicit iterator per frame.
    std::vector<std::pair<ConceptId, std::set<ConceptId>::const_iterator>> frames;
    mark[start] = Mark::Grey;
    frames.emplace_back(start, children(start).begin());
    while (!frames.empty()) {
      auto& [u, it] = frames.back();
      if (it == children(u).end()) {
        mark[u] = Mark::Black;
        frames.pop_back();
        continue;
      }
      ConceptId v = *it++;
      if (mark[v] == Mark::Grey) {
        std::vector<ConceptId> path{v};
        for (ConceptId w = u; w != v; w = via[w]) path.push_back(w);
        path.push_back(v);
        std::reverse(path.begin(), path.end());
        return path;
      }
      if (mark[v] == Mark::White) {
        mark[v] = Mark::Grey;
        via[v] = u;
        frames.emplace_back(v, children(v).begin());
      }
    }
  }
  return std::nullopt;
}

EdgeSet Taxonomy::closure() const {
  EdgeSet out;
  for (ConceptId u : nodes_) {
    for (ConceptId v : descendants(u)) out.insert(Edge{u, v});
  }
  return out;
}

std::vector<std::vector<ConceptId>> Taxonomy::levels() const {
  std::map<ConceptId, std::size_t> depth;
  std::deque<ConceptId> queue;
  for (ConceptId r : roots()) {
    depth[r] = 0;
    queue.push_back(r);
  }
  while (!queue.empty()) {
    ConceptId u = queue.front();
    queue.pop_front();
    for (ConceptId v : children(u)) {
      if (depth.count(v) == 0) {
        depth[v] = depth[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<std::vector<ConceptId>> out;
  for (const auto& [node, d] : depth) {
    if (out.size() <= d) out.resize(d + 1);
    out[d].push_back(node);
  }
  return out;
}

}  // namespace taxograft
