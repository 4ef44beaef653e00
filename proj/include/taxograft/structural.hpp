#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "taxograft/click_graph.hpp"
#include "taxograft/nn.hpp"
#include "taxograft/relational.hpp"

namespace taxograft {

// Dense row index for the nodes of a graph, ascending by concept id.
class NodeIndex {
 public:
  NodeIndex() = default;
  explicit NodeIndex(const std::set<ConceptId>& nodes);

  Eigen::Index row(ConceptId c) const;
  bool contains(ConceptId c) const { return rows_.count(c) > 0; }
  ConceptId concept_at(Eigen::Index row) const { return concepts_[static_cast<std::size_t>(row)]; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(concepts_.size()); }
  const std::vector<ConceptId>& concepts() const noexcept { return concepts_; }

 private:
  std::vector<ConceptId> concepts_;
  std::map<ConceptId, Eigen::Index> rows_;
};

struct NodeEmbeddings {
  NodeIndex index;
  nn::MatrixXd table;  // one row per node, h^0
};

NodeEmbeddings init_embeddings(const HeteroGraph& graph, const RelationEncoder& encoder);

// Cosine similarity; 0 when either vector has zero norm.
double cosine(const nn::RowVectorXd& u, const nn::RowVectorXd& v);

struct InfoNceResult {
  double loss = 0.0;
  std::map<Eigen::Index, nn::RowVectorXd> grads;  // d loss / d h for touched rows
};

// -ln( sum_{v in N(u)} e^{S(u,v)} / (sum_{v in N(u)} e^{S(u,v)} + sum_{w in Neg} e^{S(u,w)}) )
InfoNceResult infonce_loss(Eigen::Index anchor, std::span<const Eigen::Index> neighbors,
                           std::span<const Eigen::Index> negatives, const nn::MatrixXd& table);

// ceil(rate * |N(u)|) uniform draws among nodes that are neither u nor a
// neighbor of u. Empty when no such node exists.
std::vector<Eigen::Index> sample_contrastive_negatives(Eigen::Index anchor, std::span<const Eigen::Index> neighbors,
                                                       Eigen::Index n_nodes, double negative_rate, Rng& rng);

struct ContrastiveOptions {
  int epochs = 100;
  double negative_rate = 1.2;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
};

struct ContrastiveReport {
  std::vector<double> losses;          // mean InfoNCE per epoch, before the step
  std::vector<ConceptId> isolated;     // skipped anchors
};

// Full-batch gradient descent on the mean InfoNCE over all non-isolated
// anchors. Each anchor's negatives are drawn once per run.
ContrastiveReport contrastive_pretrain(const HeteroGraph& graph, NodeEmbeddings& embeddings,
                                       const ContrastiveOptions& options);

using SparseMatrixXd = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Symmetric weighted adjacency with unit self-loops.
SparseMatrixXd propagation_matrix(const HeteroGraph& graph, const NodeIndex& index);

// Stack of edge-weighted graph convolutions h^k = relu(A h^{k-1} W_k), with
// A the propagation matrix (row-vector convention).
class GcnStack {
 public:
  GcnStack() = default;
  GcnStack(int layers, Eigen::Index dim, std::uint64_t seed);

  int layers() const { return static_cast<int>(weights_.size()); }
  Eigen::Index dim() const { return dim_; }

  nn::MatrixXd forward(const SparseMatrixXd& adjacency, const nn::MatrixXd& h0);
  // Accumulates weight gradients; returns d loss / d h0.
  nn::MatrixXd backward(const SparseMatrixXd& adjacency, const nn::MatrixXd& d_out);

  std::vector<nn::ParameterXd*> parameters();
  nn::ParameterXd& weight(int layer) { return weights_[static_cast<std::size_t>(layer)]; }

 private:
  Eigen::Index dim_ = 0;
  std::vector<nn::ParameterXd> weights_;
  std::vector<nn::MatrixXd> aggregated_;  // A h^{k-1} per layer
  std::vector<nn::MatrixXd> pre_;         // A h^{k-1} W per layer
};

struct PositionEmbeddings {
  nn::ParameterXd parent;
  nn::ParameterXd child;

  PositionEmbeddings() = default;
  PositionEmbeddings(Eigen::Index dim, std::uint64_t seed);
};

// [h_q ⊕ p_parent ⊕ h_i ⊕ p_child]
nn::RowVectorXd struct_pair(ConceptId query, ConceptId item, const NodeIndex& index, const nn::MatrixXd& layer_k,
                            const PositionEmbeddings& positions);

}  // namespace taxograft
