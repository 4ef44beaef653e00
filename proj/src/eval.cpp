#include "taxograft/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <spdlog/fmt/fmt.h>

#include "taxograft/error.hpp"
#include "taxograft/rng.hpp"
#include "taxograft/structural.hpp"

namespace taxograft {

std::vector<int> baseline_random(std::span<const Edge> candidates, std::uint64_t seed) {
  Rng rng = make_rng(seed, "baseline.random");
  std::vector<int> out;
  out.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) out.push_back(static_cast<int>(rng() >> 63));
  return out;
}

std::vector<int> baseline_substr(std::span<const Edge> candidates, const ConceptVocabulary& vocab) {
  std::vector<int> out;
  out.reserve(candidates.size());
  for (const Edge& e : candidates) {
    const std::string& q = vocab.surface(e.parent);
    const std::string& i = vocab.surface(e.child);
    out.push_back(e.parent != e.child && i.find(q) != std::string::npos ? 1 : 0);
  }
  return out;
}

namespace {

const nn::RowVectorXd& vector_of(const ConceptVectors& vectors, ConceptId c) {
  auto it = vectors.find(c);
  if (it == vectors.end()) throw Error(ErrorKind::MissingEmbedding, "no vector for concept " + std::to_string(c));
  return it->second;
}

}  // namespace

std::vector<double> neighbor_distances(std::span<const Edge> candidates, const Taxonomy& taxonomy,
                                       const ConceptVectors& vectors) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const Edge& e : candidates) {
    const nn::RowVectorXd& item = vector_of(vectors, e.child);
    double total = 1.0 - cosine(item, vector_of(vectors, e.parent));
    std::size_t n = 1;
    if (taxonomy.has_node(e.parent)) {
      for (ConceptId c : taxonomy.children(e.parent)) {
        total += 1.0 - cosine(item, vector_of(vectors, c));
        ++n;
      }
    }
    out.push_back(total / static_cast<double>(n));
  }
  return out;
}

std::vector<int> baseline_distance_neighbor(std::span<const Edge> candidates, const Taxonomy& taxonomy,
                                            const ConceptVectors& vectors, double threshold) {
  std::vector<int> out;
  for (double d : neighbor_distances(candidates, taxonomy, vectors)) out.push_back(d < threshold ? 1 : 0);
  return out;
}

double tune_distance_threshold(std::span<const double> distances, std::span<const int> labels) {
  if (distances.size() != labels.size()) throw Error(ErrorKind::ShapeMismatch, "distances and labels differ in length");
  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> thresholds;
  if (sorted.empty()) return 1.0;
  thresholds.push_back(sorted.front());
  for (std::size_t k = 1; k < sorted.size(); ++k) thresholds.push_back(0.5 * (sorted[k - 1] + sorted[k]));
  thresholds.push_back(sorted.back() + 1e-9);

  EdgeSet gold;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == 1) gold.insert(Edge{0, static_cast<ConceptId>(k)});
  }
  double best_t = thresholds.front();
  double best_f1 = -1.0;
  for (double t : thresholds) {
    EdgeSet pred;
    for (std::size_t k = 0; k < distances.size(); ++k) {
      if (distances[k] < t) pred.insert(Edge{0, static_cast<ConceptId>(k)});
    }
    const double f1 = edge_f1(pred, gold).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

// ---- synthetic benchmark --------------------------------------------------

void SynthSpec::validate() const {
  auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (depth < 1) throw Error(ErrorKind::SpecInvalid, "depth must be at least 1");
  if (n_concepts < depth + 3) throw Error(ErrorKind::SpecInvalid, "n_concepts too small for the depth");
  if (!fraction(headword_fraction) || !fraction(noise_intention_drift) || !fraction(noise_common_item) ||
      !fraction(gold_fraction) || !fraction(existing_click_rate)) {
    throw Error(ErrorKind::SpecInvalid, "fractions must lie in [0, 1]");
  }
  if (clicks_per_edge < 1) throw Error(ErrorKind::SpecInvalid, "clicks_per_edge must be positive");
  if (sentences_per_edge < 0 || fillers_per_sentence < 0) {
    throw Error(ErrorKind::SpecInvalid, "corpus sizes must be non-negative");
  }
}

nlohmann::json SynthSpec::to_json() const {
  return nlohmann::json{{"n_concepts", n_concepts},
                        {"depth", depth},
                        {"headword_fraction", headword_fraction},
                        {"noise_intention_drift", noise_intention_drift},
                        {"noise_common_item", noise_common_item},
                        {"clicks_per_edge", clicks_per_edge},
                        {"seed", seed},
                        {"gold_fraction", gold_fraction},
                        {"existing_click_rate", existing_click_rate},
                        {"sentences_per_edge", sentences_per_edge},
                        {"fillers_per_sentence", fillers_per_sentence}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.n_concepts = j.value("n_concepts", s.n_concepts);
  s.depth = j.value("depth", s.depth);
  s.headword_fraction = j.value("headword_fraction", s.headword_fraction);
  s.noise_intention_drift = j.value("noise_intention_drift", s.noise_intention_drift);
  s.noise_common_item = j.value("noise_common_item", s.noise_common_item);
  s.clicks_per_edge = j.value("clicks_per_edge", s.clicks_per_edge);
  s.seed = j.value("seed", s.seed);
  s.gold_fraction = j.value("gold_fraction", s.gold_fraction);
  s.existing_click_rate = j.value("existing_click_rate", s.existing_click_rate);
  s.sentences_per_edge = j.value("sentences_per_edge", s.sentences_per_edge);
  s.fillers_per_sentence = j.value("fillers_per_sentence", s.fillers_per_sentence);
  return s;
}

namespace {

// Six-letter CVCVCV pseudo-words. Equal length keeps every word from being a
// substring of another.
class WordForge {
 public:
  explicit WordForge(Rng& rng) : rng_(rng) {}

  std::string next() {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    for (;;) {
      std::string w;
      for (int s = 0; s < 3; ++s) {
        w += consonants[uniform_index(rng_, consonants.size())];
        w += vowels[uniform_index(rng_, vowels.size())];
      }
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> batch(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(next());
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::vector<int> level_sizes(const SynthSpec& spec) {
  const int below_root = spec.n_concepts - 2;  // minus root and the universal item
  auto total = [&](double r) {
    double s = 0.0;
    for (int l = 1; l <= spec.depth; ++l) s += std::pow(r, l);
    return s;
  };
  double lo = 1.0;
  double hi = static_cast<double>(below_root);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < below_root ? lo : hi) = mid;
  }
  std::vector<int> sizes{1};
  int used = 0;
  for (int l = 1; l < spec.depth; ++l) {
    const int n = std::max(1, static_cast<int>(std::lround(std::pow(lo, l))));
    sizes.push_back(n);
    used += n;
  }
  sizes.push_back(below_root - used);
  if (sizes.back() < 1) throw Error(ErrorKind::SpecInvalid, "n_concepts too small for the depth");
  return sizes;
}

// Picks exactly round(share * n) members of `ids` at random.
std::set<ConceptId> pick_share(std::vector<ConceptId> ids, double share, Rng& rng) {
  shuffle_in_place(ids, rng);
  const auto n = static_cast<std::size_t>(std::lround(share * static_cast<double>(ids.size())));
  return std::set<ConceptId>(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(n, ids.size())));
}

}  // namespace

SynthBenchmark synth_benchmark(const SynthSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, "synth");
  WordForge forge(rng);
  const std::vector<int> sizes = level_sizes(spec);

  // Tree shape: ids in level order, each level spread round-robin over the
  // previous one.
  std::vector<std::vector<ConceptId>> levels;
  std::vector<ConceptId> parent_of;
  ConceptId next_id = 0;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    std::vector<ConceptId> level;
    for (int k = 0; k < sizes[l]; ++k) level.push_back(next_id++);
    if (l == 0) {
      parent_of.push_back(-1);
    } else {
      std::vector<ConceptId> order = level;
      shuffle_in_place(order, rng);
      parent_of.resize(static_cast<std::size_t>(next_id));
      const auto& above = levels[l - 1];
      for (std::size_t k = 0; k < order.size(); ++k) parent_of[static_cast<std::size_t>(order[k])] = above[k % above.size()];
    }
    levels.push_back(level);
  }
  const ConceptId universal = next_id++;

  Taxonomy full;
  full.add_node(0);
  for (ConceptId c = 1; c < universal; ++c) full.add_edge(parent_of[static_cast<std::size_t>(c)], c);

  // Gold: part of each bottom-level sibling group, at least one sibling kept.
  EdgeSet gold;
  if (spec.depth >= 1) {
    for (ConceptId p : levels[levels.size() - 2]) {
      std::vector<ConceptId> kids(full.children(p).begin(), full.children(p).end());
      if (kids.size() < 2) continue;
      shuffle_in_place(kids, rng);
      const auto want = static_cast<std::size_t>(std::lround(spec.gold_fraction * static_cast<double>(kids.size())));
      const std::size_t n = std::min(kids.size() - 1, want);
      for (std::size_t k = 0; k < n; ++k) gold.insert(Edge{p, kids[k]});
    }
  }
  std::vector<ConceptId> gold_children;
  std::vector<ConceptId> other_children;
  std::set<ConceptId> gold_set;
  for (const Edge& e : gold) gold_set.insert(e.child);
  for (ConceptId c = 1; c < universal; ++c) (gold_set.count(c) ? gold_children : other_children).push_back(c);
  std::set<ConceptId> headword = pick_share(gold_children, spec.headword_fraction, rng);
  for (ConceptId c : pick_share(other_children, spec.headword_fraction, rng)) headword.insert(c);

  SynthBenchmark bench;
  std::vector<std::string> surfaces(static_cast<std::size_t>(universal) + 1);
  surfaces[0] = forge.next();
  for (ConceptId c = 1; c < universal; ++c) {
    const auto k = static_cast<std::size_t>(c);
    surfaces[k] = headword.count(c) ? forge.next() + " " + surfaces[static_cast<std::size_t>(parent_of[k])] : forge.next();
  }
  surfaces[static_cast<std::size_t>(universal)] = forge.next();
  for (const auto& s : surfaces) bench.vocab.add_normalized(s);
  bench.universal = universal;
  bench.full = full;
  bench.taxonomy = full;
  for (const Edge& e : gold) {
    bench.taxonomy.remove_edge(e);
    if (headword.count(e.child)) bench.gold_headword.insert(e);
  }
  Taxonomy input;
  for (ConceptId c : bench.taxonomy.nodes()) {
    if (!gold_set.count(c)) input.add_node(c);
  }
  for (const Edge& e : bench.taxonomy.edges()) input.add_edge(e);
  bench.taxonomy = input;
  bench.gold = gold;

  // Click log.
  const std::vector<std::string> decorations = forge.batch(20);
  const int cpe = spec.clicks_per_edge;
  auto surface = [&](ConceptId c) { return surfaces[static_cast<std::size_t>(c)]; };
  auto decorate = [&](ConceptId c) { return decorations[uniform_index(rng, decorations.size())] + " " + surface(c); };
  auto emit = [&](ConceptId q, ConceptId item, std::int64_t count) {
    if (count >= 2 && uniform01(rng) < 0.5) {
      const std::int64_t first = count / 2;
      bench.clicks.push_back({surface(q), decorate(item), first});
      bench.clicks.push_back({surface(q), decorate(item), count - first});
    } else {
      bench.clicks.push_back({surface(q), decorate(item), count});
    }
  };
  auto edge_count = [&]() {
    return std::max<std::int64_t>(1, cpe - cpe / 2 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(cpe) + 1)));
  };

  std::vector<Edge> clicked;
  for (const Edge& e : bench.taxonomy.edges()) {
    if (uniform01(rng) < spec.existing_click_rate) clicked.push_back(e);
  }
  const std::size_t clicked_existing = clicked.size();
  for (const Edge& e : gold) clicked.push_back(e);
  for (const Edge& e : clicked) emit(e.parent, e.child, edge_count());

  std::vector<Edge> drift_sources;
  for (const Edge& e : clicked) {
    if (e.parent != 0 && full.children(parent_of[static_cast<std::size_t>(e.parent)]).size() > 1) drift_sources.push_back(e);
  }
  const auto n_drift = static_cast<std::size_t>(std::lround(spec.noise_intention_drift * static_cast<double>(clicked.size())));
  std::size_t drift_clicks = 0;
  for (std::size_t d = 0; d < n_drift && !drift_sources.empty(); ++d) {
    const ConceptId q = drift_sources[uniform_index(rng, drift_sources.size())].parent;
    std::vector<ConceptId> siblings;
    for (ConceptId s : full.children(parent_of[static_cast<std::size_t>(q)])) {
      if (s != q) siblings.push_back(s);
    }
    const ConceptId s = siblings[uniform_index(rng, siblings.size())];
    emit(q, s, 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(std::max(1, cpe / 3)))));
    ++drift_clicks;
  }

  std::set<ConceptId> query_set;
  for (const Edge& e : clicked) query_set.insert(e.parent);
  std::vector<ConceptId> queries(query_set.begin(), query_set.end());
  const std::set<ConceptId> common = pick_share(queries, spec.noise_common_item, rng);
  for (ConceptId q : common) emit(q, universal, std::max(1, cpe / 2));

  const auto n_junk = static_cast<std::size_t>(std::lround(0.05 * static_cast<double>(bench.clicks.size())));
  for (std::size_t k = 0; k < n_junk && !queries.empty(); ++k) {
    const ConceptId q = queries[uniform_index(rng, queries.size())];
    const std::string text = decorations[uniform_index(rng, decorations.size())] + " " +
                             decorations[uniform_index(rng, decorations.size())];
    bench.clicks.push_back({surface(q), text, 1 + static_cast<std::int64_t>(uniform_index(rng, 3))});
  }

  // Corpus: every true edge co-mentioned with filler words, plus random pairs.
  const std::vector<std::string> fillers = forge.batch(40);
  auto filler = [&]() { return fillers[uniform_index(rng, fillers.size())]; };
  // Fillers spread around the two mentions: before, between, after.
  auto sentence = [&](ConceptId a, ConceptId b) {
    std::array<int, 3> slots{0, 0, 0};
    for (int k = 0; k < spec.fillers_per_sentence; ++k) ++slots[uniform_index(rng, 3)];
    std::string s;
    auto put = [&](const std::string& w) { s += s.empty() ? w : " " + w; };
    for (int k = 0; k < slots[0]; ++k) put(filler());
    put(surface(a));
    for (int k = 0; k < slots[1]; ++k) put(filler());
    put(surface(b));
    for (int k = 0; k < slots[2]; ++k) put(filler());
    return s;
  };
  for (const Edge& e : full.edges()) {
    for (int k = 0; k < spec.sentences_per_edge; ++k) {
      bench.corpus.push_back(uniform01(rng) < 0.5 ? sentence(e.parent, e.child) : sentence(e.child, e.parent));
    }
  }
  const std::size_t edge_sentences = bench.corpus.size();
  const auto n_noise = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(edge_sentences)));
  for (std::size_t k = 0; k < n_noise; ++k) {
    const auto a = static_cast<ConceptId>(uniform_index(rng, static_cast<std::size_t>(universal) + 1));
    auto b = static_cast<ConceptId>(uniform_index(rng, static_cast<std::size_t>(universal)));
    if (b >= a) ++b;
    bench.corpus.push_back(sentence(a, b));
  }

  std::vector<int> sizes_out(sizes.begin(), sizes.end());
  bench.stats = nlohmann::json{
      {"spec", spec.to_json()},
      {"concepts", bench.vocab.size()},
      {"level_sizes", sizes_out},
      {"taxonomy_nodes", bench.taxonomy.nodes().size()},
      {"taxonomy_edges", bench.taxonomy.edges().size()},
      {"gold_edges", gold.size()},
      {"gold_headword_share", gold.empty() ? 0.0 : static_cast<double>(bench.gold_headword.size()) / static_cast<double>(gold.size())},
      {"clicked_taxonomy_edges", clicked_existing},
      {"drift_clicks", drift_clicks},
      {"drift_rate", clicked.empty() ? 0.0 : static_cast<double>(drift_clicks) / static_cast<double>(clicked.size())},
      {"common_item_queries", common.size()},
      {"common_item_rate", queries.empty() ? 0.0 : static_cast<double>(common.size()) / static_cast<double>(queries.size())},
      {"junk_rows", n_junk},
      {"click_rows", bench.clicks.size()},
      {"corpus_sentences", bench.corpus.size()}};
  return bench;
}

void write_benchmark(const std::filesystem::path& dir, const SynthBenchmark& bench) {
  {
    auto out = open_output(dir / "vocab.txt");
    write_vocabulary(out, bench.vocab);
  }
  {
    auto out = open_output(dir / "taxonomy.tsv");
    write_taxonomy(out, bench.taxonomy, bench.vocab);
  }
  {
    auto out = open_output(dir / "clicklog.tsv");
    write_click_log(out, bench.clicks);
  }
  {
    auto out = open_output(dir / "corpus.txt");
    for (const auto& line : bench.corpus) out << line << '\n';
  }
  {
    Taxonomy gold;
    for (const Edge& e : bench.gold) gold.add_edge(e);
    auto out = open_output(dir / "gold_edges.tsv");
    write_taxonomy(out, gold, bench.vocab);
  }
  {
    auto out = open_output(dir / "gold_taxonomy.tsv");
    write_taxonomy(out, bench.full, bench.vocab);
  }
  auto out = open_output(dir / "synth.json");
  out << bench.stats.dump(2) << '\n';
}

// ---- reports ----------------------------------------------------------------

void score_pairs(std::span<const LabeledPair> pairs, std::span<const int> predicted, Metrics& out) {
  if (pairs.size() != predicted.size()) throw Error(ErrorKind::UniverseMismatch, "one prediction per pair required");
  LabelMap pred;
  LabelMap gold;
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_kind;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    pred[pairs[k].edge()] = predicted[k];
    gold[pairs[k].edge()] = pairs[k].label();
    auto& [hits, total] = by_kind[std::string(to_string(pairs[k].kind))];
    hits += predicted[k] == pairs[k].label() ? 1 : 0;
    ++total;
  }
  out.accuracy = accuracy(pred, gold);
  out.per_pattern.clear();
  for (const auto& [kind, counts] : by_kind) {
    out.per_pattern[kind] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
}

void score_expansion(const EdgeSet& added, const Taxonomy& original, const Taxonomy& expanded, const EdgeSet& gold,
                     const Taxonomy& gold_taxonomy, Metrics& out) {
  out.edge = edge_f1(added, gold);
  const EdgeSet known = original.closure();
  EdgeSet novel_pred;
  for (const Edge& e : expanded.closure()) {
    if (!known.count(e)) novel_pred.insert(e);
  }
  EdgeSet novel_gold;
  for (const Edge& e : gold_taxonomy.closure()) {
    if (!known.count(e)) novel_gold.insert(e);
  }
  out.ancestor = edge_f1(novel_pred, novel_gold);
}

nlohmann::json report_json(const RunTable& runs) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, m] : runs) out[name] = m.to_json();
  return nlohmann::json{{"runs", out}};
}

std::string report_text(const RunTable& runs) {
  static const std::vector<std::string> kinds{"headword", "other", "shuffle", "replace"};
  std::size_t width = 6;
  for (const auto& [name, m] : runs) width = std::max(width, name.size());
  std::string out = fmt::format("{:<{}}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}", "method", width, "Acc", "Edge-P", "Edge-R",
                                "Edge-F1", "Anc-F1");
  for (const auto& k : kinds) out += fmt::format("  {:>8}", k);
  out += '\n';
  for (const auto& [name, m] : runs) {
    out += fmt::format("{:<{}}  {:>8.4f}  {:>8.4f}  {:>8.4f}  {:>8.4f}  {:>8.4f}", name, width, m.accuracy,
                       m.edge.precision, m.edge.recall, m.edge.f1, m.ancestor.f1);
    for (const auto& k : kinds) {
      auto it = m.per_pattern.find(k);
      out += it == m.per_pattern.end() ? fmt::format("  {:>8}", "-") : fmt::format("  {:>8.4f}", it->second);
    }
    out += '\n';
  }
  return out;
}

void compare_report(const std::filesystem::path& dir, const RunTable& runs) {
  {
    auto out = open_output(dir / "report.json");
    out << report_json(runs).dump(2) << '\n';
  }
  auto out = open_output(dir / "report.txt");
  out << report_text(runs);
}

}  // namespace taxograft
