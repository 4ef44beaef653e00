#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxograft/click_graph.hpp"
#include "taxograft/nn.hpp"
#include "taxograft/relational.hpp"
#include "taxograft/selfsup.hpp"
#include "taxograft/structural.hpp"

namespace taxograft {

struct ModelConfig {
  Eigen::Index hidden = 64;
  Eigen::Index position_dim = 16;
  int gcn_layers = 1;
  bool train_tables = false;   // fine-tune token and node embedding tables
  bool use_positions = true;   // false pins p_parent / p_child to zero
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Edge classifier over e = [r ⊕ s]: relation vector r from the pair encoder,
// structural vector s = [h_q^K ⊕ p_parent ⊕ h_i^K ⊕ p_child] from the GCN, and
// p = softmax(W2 sigmoid(W1 e + B1) + B2).
class TaxonomyModel {
 public:
  TaxonomyModel(std::unique_ptr<RelationEncoder> encoder, const HeteroGraph& graph, NodeEmbeddings nodes,
                const ModelConfig& config);

  Eigen::Index edge_dim() const;
  const ModelConfig& config() const noexcept { return config_; }
  const NodeIndex& node_index() const noexcept { return index_; }
  RelationEncoder& encoder() { return *encoder_; }

  // Forward over a batch; rows follow `pairs`. Caches for backward().
  nn::MatrixXd edge_reps(std::span<const Edge> pairs);
  nn::RowVectorXd edge_rep(ConceptId query, ConceptId item);
  // Columns (p_neg, p_pos).
  nn::MatrixXd classify(std::span<const Edge> pairs);
  std::vector<double> positive_scores(std::span<const Edge> pairs);

  // Mean BCE of p_pos against labels; accumulates gradients into every
  // trainable parameter.
  double loss_and_backward(std::span<const Edge> pairs, std::span<const int> labels);

  std::vector<nn::ParameterXd*> trainable_parameters();
  std::vector<nn::ParameterXd*> parameters();

  void save(const std::filesystem::path& stem);
  static std::unique_ptr<TaxonomyModel> load(const std::filesystem::path& stem, const HeteroGraph& graph);

  // Classifier weights, exposed for tests.
  nn::ParameterXd& w1() { return w1_; }
  nn::ParameterXd& b1() { return b1_; }
  nn::ParameterXd& w2() { return w2_; }
  nn::ParameterXd& b2() { return b2_; }
  nn::ParameterXd& node_table() { return nodes_; }
  PositionEmbeddings& positions() { return positions_; }
  GcnStack& gcn() { return gcn_; }

 private:
  void init_classifier();

  ModelConfig config_;
  std::unique_ptr<RelationEncoder> encoder_;
  NodeIndex index_;
  SparseMatrixXd adjacency_;
  nn::ParameterXd nodes_;
  GcnStack gcn_;
  PositionEmbeddings positions_;
  nn::ParameterXd w1_;
  nn::ParameterXd b1_;
  nn::ParameterXd w2_;
  nn::ParameterXd b2_;

  struct Cache {
    std::vector<Eigen::Index> query_rows;
    std::vector<Eigen::Index> item_rows;
    nn::MatrixXd layer_k;
    nn::MatrixXd edges;
    nn::MatrixXd hidden;
    nn::MatrixXd probs;
  } cache_;
};

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 50;
  int patience = 5;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_edge_f1 = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_edge_f1 = 0.0;

  nlohmann::json to_json() const;
};

// Mini-batch descent on BCE with seeded shuffling; early-stops on validation
// Edge-F1 and restores the best-validation parameters.
TrainResult train(TaxonomyModel& model, const DatasetSplit& split, const TrainConfig& config);

struct ScoredEdge {
  Edge edge;
  double score = 0.0;
};

// Pairs with p_pos >= threshold, sorted by score descending then ids.
std::vector<ScoredEdge> predict_edges(std::span<const Edge> candidates, TaxonomyModel& model, double threshold = 0.5);

void validate_threshold(double threshold);

}  // namespace taxograft
