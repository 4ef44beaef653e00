#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "taxograft/error.hpp"
#include "taxograft/relational.hpp"
#include "taxograft/structural.hpp"
#include "test_util.hpp"

namespace taxograft {
namespace {

nn::MatrixXd random_table(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  nn::MatrixXd m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = 2.0 * uniform01(rng) - 1.0;
  return m;
}

HeteroGraph star_graph() {
  Taxonomy t;
  t.add_edge(0, 1);
  t.add_edge(0, 2);
  t.add_edge(0, 3);
  return HeteroGraph(t, {});
}

TEST(InitEmbeddings, ShapeAndEncoderRows) {
  Taxonomy t;
  t.add_edge(0, 1);
  t.add_edge(1, 2);
  HeteroGraph g(t, {});
  ReferenceEncoder enc(3, {}, 6, 1);
  auto emb = init_embeddings(g, enc);
  EXPECT_EQ(emb.table.rows(), 3);
  EXPECT_EQ(emb.table.cols(), 6);
  EXPECT_EQ(emb.table.row(2), enc.encode_concept(2));
  auto again = init_embeddings(g, enc);
  EXPECT_EQ(again.table, emb.table);
}

TEST(InitEmbeddings, PrecomputedRowsAndMissing) {
  auto vocab = testing::make_vocab({"aa", "bb", "cc"});
  EmbeddingTable table;
  table.dim = 2;
  table.vectors[0] = (Eigen::RowVectorXd(2) << 1, 2).finished();
  table.vectors[1] = (Eigen::RowVectorXd(2) << 3, 4).finished();
  PrecomputedEncoder enc(table, 3, 4, 1);
  Taxonomy t;
  t.add_edge(0, 1);
  auto emb = init_embeddings(HeteroGraph(t, {}), enc);
  EXPECT_EQ(emb.table.row(1), table.vectors[1]);
  t.add_edge(1, 2);
  try {
    init_embeddings(HeteroGraph(t, {}), enc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingEmbedding);
  }
}

TEST(Cosine, Cases) {
  nn::RowVectorXd a(2), b(2);
  a << 1, 0;
  b << 0, 3;
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine(a, -2.0 * a), -1.0);
  EXPECT_DOUBLE_EQ(cosine(a, nn::RowVectorXd::Zero(2)), 0.0);
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    nn::RowVectorXd u = random_table(1, 5, rng()), v = random_table(1, 5, rng());
    const double c = cosine(u, v);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(InfoNce, UniformSimilarityClosedForm) {
  nn::MatrixXd table = nn::MatrixXd::Ones(6, 3);
  std::vector<Eigen::Index> nb = {1, 2};
  std::vector<Eigen::Index> neg = {3, 4, 5};
  EXPECT_NEAR(infonce_loss(0, nb, neg, table).loss, -std::log(2.0 / 5.0), 1e-12);
}

TEST(InfoNce, SeparatedBeatsUniform) {
  nn::MatrixXd table(4, 2);
  table << 1, 0, 1, 0, -1, 0, -1, 0;
  std::vector<Eigen::Index> nb = {1};
  std::vector<Eigen::Index> neg = {2, 3};
  nn::MatrixXd uniform = nn::MatrixXd::Ones(4, 2);
  EXPECT_LT(infonce_loss(0, nb, neg, table).loss, infonce_loss(0, nb, neg, uniform).loss);
}

TEST(InfoNce, IsolatedAnchor) {
  nn::MatrixXd table = nn::MatrixXd::Ones(2, 2);
  try {
    infonce_loss(0, {}, std::vector<Eigen::Index>{1}, table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IsolatedNode);
  }
}

TEST(InfoNce, GradientCheck) {
  nn::ParameterXd table("table", random_table(7, 4, 3));
  std::vector<Eigen::Index> nb = {1, 2, 3};
  std::vector<Eigen::Index> neg = {4, 5, 6, 2};
  auto loss = [&]() {
    auto r = infonce_loss(0, nb, neg, table.value);
    for (const auto& [row, g] : r.grads) table.grad.row(row) += g;
    return r.loss;
  };
  std::vector<nn::ParameterXd*> params = {&table};
  auto report = nn::grad_check<double>(loss, params, 1e-5, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_relative_error;
}

TEST(ContrastiveNegatives, CountAndExclusion) {
  Rng rng(4);
  std::vector<Eigen::Index> nb = {1, 2, 3, 4, 5};
  auto neg = sample_contrastive_negatives(0, nb, 20, 1.2, rng);
  EXPECT_EQ(neg.size(), 6u);
  for (auto w : neg) {
    EXPECT_NE(w, 0);
    EXPECT_EQ(std::find(nb.begin(), nb.end(), w), nb.end());
  }
  EXPECT_TRUE(sample_contrastive_negatives(0, std::vector<Eigen::Index>{1}, 2, 1.2, rng).empty());
}

TEST(ContrastivePretrain, PairMovesTogether) {
  Taxonomy t;
  t.add_edge(0, 1);
  t.add_node(2);
  t.add_node(3);
  HeteroGraph g(t, {});
  NodeEmbeddings emb{NodeIndex(g.nodes()), random_table(4, 6, 5)};
  const double before = cosine(emb.table.row(0), emb.table.row(1));
  auto report = contrastive_pretrain(g, emb, ContrastiveOptions{50, 1.2, 0.5, 1});
  EXPECT_GT(cosine(emb.table.row(0), emb.table.row(1)), before);
  EXPECT_EQ(report.isolated, (std::vector<ConceptId>{2, 3}));
}

TEST(ContrastivePretrain, ZeroEpochsUnchanged) {
  auto g = star_graph();
  NodeEmbeddings emb{NodeIndex(g.nodes()), random_table(4, 3, 6)};
  const nn::MatrixXd before = emb.table;
  contrastive_pretrain(g, emb, ContrastiveOptions{0, 1.2, 1.0, 1});
  EXPECT_EQ(emb.table, before);
}

TEST(ContrastivePretrain, LossNonIncreasingWithSmallStep) {
  std::mt19937_64 rng(12);
  Taxonomy t;
  for (ConceptId c = 1; c < 10; ++c) t.add_edge(static_cast<ConceptId>(rng() % c), c);
  HeteroGraph g(t, {ClickEdge{0, 7, 1, 0.6}, ClickEdge{0, 8, 1, 0.4}});
  NodeEmbeddings emb{NodeIndex(g.nodes()), random_table(10, 8, 7)};
  auto report = contrastive_pretrain(g, emb, ContrastiveOptions{40, 1.2, 0.05, 3});
  for (std::size_t k = 1; k < report.losses.size(); ++k) EXPECT_LE(report.losses[k], report.losses[k - 1] + 1e-12);
}

TEST(ContrastivePretrain, NegativeRateSweepStaysFinite) {
  auto g = star_graph();
  for (double rate : {0.8, 1.0, 1.2, 1.5, 2.0}) {
    NodeEmbeddings emb{NodeIndex(g.nodes()), random_table(4, 5, 8)};
    auto report = contrastive_pretrain(g, emb, ContrastiveOptions{20, rate, 1.0, 1});
    for (double l : report.losses) EXPECT_TRUE(std::isfinite(l));
    EXPECT_TRUE(emb.table.allFinite());
  }
}

TEST(Gcn, SelfLoopIdentity) {
  Taxonomy t;
  t.add_node(0);
  HeteroGraph g(t, {});
  NodeIndex index(g.nodes());
  GcnStack gcn(1, 3, 1);
  gcn.weight(0).value = nn::MatrixXd::Identity(3, 3);
  nn::MatrixXd h0(1, 3);
  h0 << -1, 0.5, 2;
  EXPECT_EQ(gcn.forward(propagation_matrix(g, index), h0), nn::relu(h0));
}

TEST(Gcn, StarCenterSumsNeighborhood) {
  auto g = star_graph();
  NodeIndex index(g.nodes());
  GcnStack gcn(1, 2, 1);
  gcn.weight(0).value = nn::MatrixXd::Identity(2, 2);
  nn::MatrixXd h0(4, 2);
  h0 << 1, 2, 3, 4, 5, 6, 7, 8;
  auto h1 = gcn.forward(propagation_matrix(g, index), h0);
  EXPECT_DOUBLE_EQ(h1(0, 0), 16.0);
  EXPECT_DOUBLE_EQ(h1(0, 1), 20.0);
  EXPECT_DOUBLE_EQ(h1(1, 0), 4.0);
  EXPECT_TRUE((h1.array() >= 0).all());
}

TEST(Gcn, ClickWeightsEnterAdjacency) {
  Taxonomy t;
  t.add_edge(0, 1);
  HeteroGraph g(t, {ClickEdge{0, 2, 3, 0.25}});
  NodeIndex index(g.nodes());
  auto a = nn::MatrixXd(propagation_matrix(g, index));
  EXPECT_DOUBLE_EQ(a(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(a(0, 2), 0.25);
  EXPECT_DOUBLE_EQ(a(2, 0), 0.25);
  EXPECT_DOUBLE_EQ(a(2, 2), 1.0);
}

TEST(Gcn, GradientCheck) {
  auto g = star_graph();
  NodeIndex index(g.nodes());
  const auto adj = propagation_matrix(g, index);
  GcnStack gcn(2, 3, 4);
  nn::ParameterXd h0("h0", random_table(4, 3, 9));
  const nn::MatrixXd c = random_table(4, 3, 10);
  auto loss = [&]() {
    nn::MatrixXd h = gcn.forward(adj, h0.value);
    h0.grad += gcn.backward(adj, c);
    return (h.array() * c.array()).sum();
  };
  auto params = gcn.parameters();
  params.push_back(&h0);
  auto report = nn::grad_check<double>(loss, params, 1e-5, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_relative_error << " " << report.worst_parameter;
}

TEST(StructPair, LayoutAndDirection) {
  auto g = star_graph();
  NodeIndex index(g.nodes());
  PositionEmbeddings pos(2, 1);
  nn::MatrixXd layer = random_table(4, 3, 11);
  auto s = struct_pair(0, 1, index, layer, pos);
  EXPECT_EQ(s.size(), 2 * (3 + 2));
  EXPECT_EQ(s.segment(0, 3), layer.row(0));
  EXPECT_EQ(s.segment(3, 2), pos.parent.value.row(0));
  EXPECT_EQ(s.segment(5, 3), layer.row(1));
  EXPECT_EQ(s.segment(8, 2), pos.child.value.row(0));
  auto r = struct_pair(1, 0, index, layer, pos);
  EXPECT_NE(s, r);
  EXPECT_EQ(r.segment(0, 3), s.segment(5, 3));
  auto self = struct_pair(2, 2, index, layer, pos);
  EXPECT_EQ(self.segment(0, 3), self.segment(5, 3));
  EXPECT_THROW(struct_pair(0, 9, index, layer, pos), Error);
}

}  // namespace
}  // namespace taxograft
