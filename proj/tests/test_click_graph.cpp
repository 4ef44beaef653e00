#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "taxograft/click_graph.hpp"
#include "test_util.hpp"

namespace taxograft {
namespace {

using testing::id_of;
using testing::make_vocab;

// q1 -> a x3, q1 -> b x1, q2 -> b x1 with q1=0, q2=1, a=2, b=3.
std::vector<ClickTriple> worked_triples() { return {{0, 2, 3}, {0, 3, 1}, {1, 3, 1}}; }

double weight_of(const std::vector<ClickEdge>& edges, ConceptId q, ConceptId i) {
  for (const auto& e : edges) {
    if (e.query_concept == q && e.item_concept == i) return e.weight;
  }
  ADD_FAILURE() << "no edge " << q << "->" << i;
  return -1.0;
}

TEST(CollectItems, KeepsOnlyTaxonomyQueries) {
  auto vocab = make_vocab({"面包", "奶酪包", "蛋糕"});
  Taxonomy t;
  t.add_edge(0, 2);
  std::vector<ClickRecord> log = {{"面包", "网红奶酪包", 7}, {"奶酪包", "x", 1}};
  auto got = collect_items(t, vocab, log);
  ASSERT_EQ(got.size(), 1u);
  ASSERT_EQ(got.at(0).size(), 1u);
  EXPECT_EQ(got.at(0)[0].count, 7);
  EXPECT_TRUE(collect_items(t, vocab, {}).empty());
}

TEST(IdentifyItems, ResolvesDropsAndCounts) {
  auto vocab = make_vocab({"面包", "奶酪包"});
  CollectedItems collected;
  collected[0] = {{"网红奶酪包", 7}, {"xyzzy", 3}, {"美味面包", 2}};
  auto got = identify_items(collected, ConceptMatcher(vocab));
  ASSERT_EQ(got.triples.size(), 1u);
  EXPECT_EQ(got.triples[0], (ClickTriple{0, 1, 7}));
  EXPECT_EQ(got.unresolved_clicks, 3);
  EXPECT_EQ(got.self_loop_clicks, 2);
}

TEST(ComputeIf, WorkedExample) {
  auto f = compute_if(worked_triples());
  EXPECT_DOUBLE_EQ(f.at({0, 2}), 0.75);
  EXPECT_DOUBLE_EQ(f.at({0, 3}), 0.25);
  EXPECT_DOUBLE_EQ(f.at({1, 3}), 1.0);
}

TEST(ComputeIf, UniformCounts) {
  std::vector<ClickTriple> t = {{0, 1, 4}, {0, 2, 4}, {0, 3, 4}, {0, 4, 4}};
  for (const auto& [pair, v] : compute_if(t)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(ComputeIqf, WorkedExample) {
  auto iqf = compute_iqf(worked_triples());
  EXPECT_DOUBLE_EQ(iqf.at(3), 0.0);
  EXPECT_NEAR(iqf.at(2), std::log(2.0), 1e-15);
}

TEST(ComputeIqf, DecreasesAsMoreQueriesClick) {
  std::vector<ClickTriple> t;
  for (ConceptId q = 0; q < 8; ++q) t.push_back({q, 100, 1});
  double previous = std::numeric_limits<double>::infinity();
  for (ConceptId q = 0; q < 8; ++q) {
    t.push_back({q, 200, 1});
    const double v = compute_iqf(t).at(200);
    EXPECT_LT(v, previous);
    EXPECT_GE(v, 0.0);
    previous = v;
  }
}

TEST(AssignWeights, WorkedExample) {
  auto t = worked_triples();
  auto w = assign_weights(t, compute_if(t), compute_iqf(t));
  EXPECT_NEAR(weight_of(w, 0, 2), 0.5891226779911239, 1e-9);
  EXPECT_NEAR(weight_of(w, 0, 3), 0.4108773220088761, 1e-9);
  EXPECT_NEAR(weight_of(w, 1, 3), 1.0, 1e-12);
}

TEST(AssignWeights, PermutationInvariant) {
  std::vector<ClickTriple> t = {{0, 2, 5}, {0, 3, 2}, {0, 4, 1}, {1, 2, 1}};
  auto base = assign_weights(t, compute_if(t), compute_iqf(t));
  std::vector<ClickTriple> shuffled = {t[2], t[3], t[0], t[1]};
  auto other = assign_weights(shuffled, compute_if(shuffled), compute_iqf(shuffled));
  for (const auto& e : base) EXPECT_DOUBLE_EQ(weight_of(other, e.query_concept, e.item_concept), e.weight);
}

TEST(AssignWeights, IntentionDriftPenalty) {
  std::vector<ClickTriple> t = {{0, 2, 9}, {0, 3, 1}, {1, 4, 1}};
  auto w = assign_weights(t, compute_if(t), compute_iqf(t));
  EXPECT_GT(weight_of(w, 0, 2), weight_of(w, 0, 3));
}

TEST(AssignWeights, RandomLogsSumToOne) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::pair<ConceptId, ConceptId>, std::int64_t> counts;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int k = 0; k < n; ++k) {
      ConceptId q = static_cast<ConceptId>(rng() % 6);
      ConceptId i = static_cast<ConceptId>(10 + rng() % 10);
      counts[{q, i}] += 1 + static_cast<std::int64_t>(rng() % 20);
    }
    std::vector<ClickTriple> t;
    for (const auto& [pair, c] : counts) t.push_back({pair.first, pair.second, c});
    auto w = assign_weights(t, compute_if(t), compute_iqf(t));
    std::map<ConceptId, double> sums;
    for (const auto& e : w) {
      EXPECT_GT(e.weight, 0.0);
      EXPECT_LE(e.weight, 1.0);
      sums[e.query_concept] += e.weight;
    }
    for (const auto& [q, s] : sums) EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(BuildGraph, EmptyLogIsTaxonomyOnly) {
  auto vocab = make_vocab({"a", "b"});
  Taxonomy t;
  t.add_edge(0, 1);
  auto built = build_graph(t, vocab, {});
  EXPECT_TRUE(built.graph.click_edges().empty());
  EXPECT_EQ(built.graph.taxo_edges(), t.edges());
}

TEST(BuildGraph, BreadFixture) {
  auto vocab = make_vocab({"面包", "黑麦面包", "奶酪包", "吐司"});
  Taxonomy t;
  t.add_edge(0, 1);
  t.add_edge(0, 3);
  std::vector<ClickRecord> log = {{"面包", "网红奶酪包", 7}, {"面包", "黑麦面包切片", 2}, {"面包", "xyzzy", 4}};
  auto built = build_graph(t, vocab, log);
  EXPECT_TRUE(built.graph.has_click_edge(0, id_of(vocab, "奶酪包")));
  for (const auto& e : built.graph.click_edges()) {
    EXPECT_GT(e.weight, 0.0);
    EXPECT_LE(e.weight, 1.0);
  }
  EXPECT_EQ(built.stats.items, 13);
  EXPECT_EQ(built.stats.covered_nodes, 1);
  EXPECT_EQ(built.stats.covered_edges, 1);
  EXPECT_DOUBLE_EQ(built.stats.edge_coverage, 0.5);
  EXPECT_EQ(built.stats.new_edges, 1);
  EXPECT_EQ(built.stats.new_concepts, 1);
  EXPECT_EQ(built.stats.unresolved_clicks, 4);
}

TEST(BuildGraph, CoverageOnHandCountedFixture) {
  auto vocab = make_vocab({"r", "aa", "bb", "cc", "dd", "ee"});
  Taxonomy t;
  t.add_edge(0, 1);
  t.add_edge(0, 2);
  t.add_edge(0, 3);
  t.add_edge(1, 4);
  std::vector<ClickRecord> log = {{"r", "aa", 1}, {"r", "cc", 2}, {"aa", "ee", 1}, {"r", "ee", 1}};
  auto built = build_graph(t, vocab, log);
  EXPECT_EQ(built.stats.covered_edges, 2);
  EXPECT_DOUBLE_EQ(built.stats.edge_coverage, 2.0 / 4.0);
  EXPECT_EQ(built.stats.new_edges, 2);
}

TEST(BuildGraph, ParallelKindsBothKept) {
  auto vocab = make_vocab({"aa", "bb"});
  Taxonomy t;
  t.add_edge(0, 1);
  auto built = build_graph(t, vocab, std::vector<ClickRecord>{{"aa", "bb", 3}});
  EXPECT_EQ(built.graph.taxo_edges().size(), 1u);
  EXPECT_EQ(built.graph.click_edges().size(), 1u);
  EXPECT_DOUBLE_EQ(built.graph.neighbors(0).at(1), 2.0);
}

TEST(GraphTsv, RoundTrip) {
  auto vocab = make_vocab({"面包", "黑麦面包", "奶酪包", "吐司"});
  Taxonomy t;
  t.add_edge(0, 1);
  auto built = build_graph(t, vocab, std::vector<ClickRecord>{{"面包", "奶酪包", 3}, {"面包", "吐司", 1}});
  std::stringstream io;
  write_graph(io, built.graph, vocab);
  auto back = read_graph(io, vocab);
  EXPECT_EQ(back.taxo_edges(), built.graph.taxo_edges());
  ASSERT_EQ(back.click_edges().size(), built.graph.click_edges().size());
  for (std::size_t k = 0; k < back.click_edges().size(); ++k) {
    EXPECT_EQ(back.click_edges()[k].weight, built.graph.click_edges()[k].weight);
  }
}

}  // namespace
}  // namespace taxograft
