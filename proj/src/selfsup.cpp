#include "taxograft/selfsup.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "taxograft/error.hpp"
#include "taxograft/rng.hpp"

namespace taxograft {

std::string_view to_string(PairKind kind) noexcept {
  switch (kind) {
    case PairKind::Headword: return "headword";
    case PairKind::Other: return "other";
    case PairKind::Shuffle: return "shuffle";
    case PairKind::Replace: return "replace";
  }
  return "other";
}

bool detect_headword(std::string_view parent, std::string_view child) {
  if (parent.empty() || child.size() <= parent.size()) return false;
  if (child.substr(child.size() - parent.size()) != parent) return false;
  if (child.find(' ') != std::string_view::npos) {
    return child[child.size() - parent.size() - 1] == ' ';
  }
  return true;
}

std::vector<LabeledPair> balance_positives(const Taxonomy& taxonomy, const ConceptVocabulary& vocab,
                                           const HeteroGraph& graph, const BalanceOptions& options) {
  if (taxonomy.edges().empty()) throw Error(ErrorKind::EmptyPositives, "taxonomy has no edges");
  Rng keep_rng = make_rng(options.seed, "selfsup.keep");
  std::vector<LabeledPair> others;
  std::vector<LabeledPair> headwords;
  for (const Edge& e : taxonomy.edges()) {
    if (!detect_headword(vocab.surface(e.parent), vocab.surface(e.child))) {
      others.push_back(LabeledPair{e.parent, e.child, PairKind::Other});
      continue;
    }
    // Draw for every headword edge so the stream does not depend on clicks.
    const bool keep = uniform01(keep_rng) < options.keep_prob;
    if (keep && graph.has_click_edge(e.parent, e.child)) {
      headwords.push_back(LabeledPair{e.parent, e.child, PairKind::Headword});
    }
  }
  // Largest H with H / (others + H) <= target_ratio. With no other-pattern
  // supply the ratio cannot be met and every candidate is kept.
  std::size_t cap = headwords.size();
  if (!others.empty() && options.target_ratio < 1.0) {
    const double bound = options.target_ratio * static_cast<double>(others.size()) / (1.0 - options.target_ratio);
    cap = std::min(cap, static_cast<std::size_t>(std::floor(bound + 1e-9)));
  }
  if (cap < headwords.size()) {
    Rng down_rng = make_rng(options.seed, "selfsup.downsample");
    shuffle_in_place(headwords, down_rng);
    headwords.resize(cap);
  }
  std::vector<LabeledPair> out = std::move(others);
  out.insert(out.end(), headwords.begin(), headwords.end());
  std::sort(out.begin(), out.end(), [](const LabeledPair& a, const LabeledPair& b) {
    return std::tie(a.query, a.item) < std::tie(b.query, b.item);
  });
  return out;
}

NegativeSampling sample_negatives(std::span<const LabeledPair> positives, const Taxonomy& taxonomy,
                                  const HeteroGraph& graph, const NegativeOptions& options) {
  if (options.per_positive < 1) throw Error(ErrorKind::ConfigInvalid, "per_positive must be >= 1");
  NegativeSampling result;

  std::vector<ConceptId> pool;
  for (ConceptId c : graph.click_concepts()) {
    if (taxonomy.has_node(c)) pool.push_back(c);
  }

  // Negatives alternate deterministically: exactly round(share * total)
  // shuffles (at most one per positive), the rest replaces.
  const std::size_t n = positives.size();
  const std::size_t per = static_cast<std::size_t>(options.per_positive);
  const auto wanted_shuffles = static_cast<std::size_t>(
      std::llround(options.shuffle_share * static_cast<double>(n * per)));
  std::map<ConceptId, std::set<ConceptId>> excluded_cache;
  auto excluded_for = [&](ConceptId q) -> const std::set<ConceptId>& {
    auto it = excluded_cache.find(q);
    if (it != excluded_cache.end()) return it->second;
    std::set<ConceptId> ex = taxonomy.ancestors(q);
    auto desc = taxonomy.descendants(q);
    ex.insert(desc.begin(), desc.end());
    ex.insert(q);
    return excluded_cache.emplace(q, std::move(ex)).first->second;
  };
  auto replace_feasible = [&](ConceptId q) {
    const auto& ex = excluded_for(q);
    return std::any_of(pool.begin(), pool.end(), [&](ConceptId c) { return ex.count(c) == 0; });
  };

  // Positives without any replace candidate take shuffle slots first.
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  Rng assign_rng = make_rng(options.seed, "selfsup.assign");
  shuffle_in_place(order, assign_rng);
  std::stable_partition(order.begin(), order.end(),
                        [&](std::size_t k) { return !replace_feasible(positives[k].query); });
  std::vector<bool> gets_shuffle(n, false);
  for (std::size_t k = 0; k < std::min(wanted_shuffles, n); ++k) gets_shuffle[order[k]] = true;

  std::set<Edge> used;
  auto draw_replace = [&](ConceptId q, Rng& rng) {
    const auto& excluded = excluded_for(q);
    for (int attempt = 0; attempt < options.max_replace_tries && !pool.empty(); ++attempt) {
      ConceptId c = pool[uniform_index(rng, pool.size())];
      if (excluded.count(c) > 0 || !used.insert(Edge{q, c}).second) continue;
      result.negatives.push_back(LabeledPair{q, c, PairKind::Replace});
      return true;
    }
    std::vector<ConceptId> open;
    for (ConceptId c : pool) {
      if (excluded.count(c) == 0 && used.count(Edge{q, c}) == 0) open.push_back(c);
    }
    if (open.empty()) return false;
    ConceptId c = open[uniform_index(rng, open.size())];
    used.insert(Edge{q, c});
    result.negatives.push_back(LabeledPair{q, c, PairKind::Replace});
    return true;
  };

  std::size_t gaps = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const LabeledPair& pos = positives[j];
    Rng rng(mix_seed(stream_seed(options.seed, "selfsup.replace"), j));
    std::size_t replaces = per - (gets_shuffle[j] ? 1 : 0);
    bool shuffled = false;
    auto emit_shuffle = [&]() {
      Edge rev{pos.item, pos.query};
      if (shuffled || !used.insert(rev).second) return false;
      shuffled = true;
      result.negatives.push_back(LabeledPair{pos.item, pos.query, PairKind::Shuffle});
      return true;
    };
    if (gets_shuffle[j] && !emit_shuffle()) ++gaps;
    for (std::size_t r = 0; r < replaces; ++r) {
      if (draw_replace(pos.query, rng)) continue;
      if (emit_shuffle()) {
        ++result.replace_fallbacks;
      } else {
        ++gaps;
      }
    }
  }

  // Unfilled slots become extra replace negatives on other positives, round robin.
  Rng refill_rng = make_rng(options.seed, "selfsup.refill");
  for (std::size_t k = 0, misses = 0; gaps > 0 && n > 0 && misses < n; k = (k + 1) % n) {
    if (draw_replace(positives[order[k]].query, refill_rng)) {
      --gaps;
      misses = 0;
    } else {
      ++misses;
    }
  }
  result.shortfall = gaps;
  return result;
}

DatasetSplit split_dataset(std::span<const LabeledPair> pairs, std::uint64_t seed) {
  DatasetSplit split;
  split.seed = seed;
  std::map<PairKind, std::vector<LabeledPair>> strata;
  for (const auto& p : pairs) strata[p.kind].push_back(p);
  for (auto& [kind, members] : strata) {
    Rng rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(kind)), "selfsup.split");
    shuffle_in_place(members, rng);
    const double n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(0.6 * n));
    const auto n_val = std::min(members.size() - n_train, static_cast<std::size_t>(std::llround(0.2 * n)));
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
                     members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                      members.end());
  }
  return split;
}

void write_pairs_jsonl(std::ostream& out, std::span<const LabeledPair> pairs, const ConceptVocabulary& vocab) {
  for (const auto& p : pairs) {
    nlohmann::json row{{"query", vocab.surface(p.query)}, {"item", vocab.surface(p.item)}, {"label", p.label()}};
    if (p.positive()) {
      row["pattern"] = to_string(p.kind);
      row["neg_type"] = nullptr;
    } else {
      row["pattern"] = nullptr;
      row["neg_type"] = to_string(p.kind);
    }
    out << row.dump() << '\n';
  }
}

std::vector<LabeledPair> read_pairs_jsonl(std::istream& in, const ConceptVocabulary& vocab) {
  std::vector<LabeledPair> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedLine, at_line(std::string("invalid JSON: ") + e.what(), number));
    }
    auto q = vocab.find(row.value("query", ""));
    auto i = vocab.find(row.value("item", ""));
    if (!q || !i) throw Error(ErrorKind::UnknownConcept, at_line("pair concept not in vocabulary", number));
    const int label = row.value("label", -1);
    const nlohmann::json& tag = label == 1 ? row["pattern"] : row["neg_type"];
    if (!tag.is_string() || (label != 0 && label != 1)) {
      throw Error(ErrorKind::MalformedLine, at_line("label / pattern / neg_type inconsistent", number));
    }
    const std::string t = tag.get<std::string>();
    PairKind kind;
    if (label == 1 && t == "headword") kind = PairKind::Headword;
    else if (label == 1 && t == "other") kind = PairKind::Other;
    else if (label == 0 && t == "shuffle") kind = PairKind::Shuffle;
    else if (label == 0 && t == "replace") kind = PairKind::Replace;
    else throw Error(ErrorKind::MalformedLine, at_line("unknown pair tag '" + t + "'", number));
    out.push_back(LabeledPair{*q, *i, kind});
  }
  return out;
}

nlohmann::json split_manifest(const DatasetSplit& split) {
  auto counts = [](std::span<const LabeledPair> pairs) {
    nlohmann::json c{{"total", pairs.size()}};
    for (PairKind k : {PairKind::Headword, PairKind::Other, PairKind::Shuffle, PairKind::Replace}) {
      c[std::string(to_string(k))] = std::count_if(pairs.begin(), pairs.end(), [k](const auto& p) { return p.kind == k; });
    }
    return c;
  };
  return nlohmann::json{{"seed", split.seed},
                        {"train", counts(split.train)},
                        {"val", counts(split.val)},
                        {"test", counts(split.test)}};
}

}  // namespace taxograft
