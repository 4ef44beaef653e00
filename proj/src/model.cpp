#include "taxograft/model.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "taxograft/checkpoint.hpp"
#include "taxograft/error.hpp"
#include "taxograft/metrics.hpp"
#include "taxograft/rng.hpp"

namespace taxograft {

nlohmann::json ModelConfig::to_json() const {
  return nlohmann::json{{"hidden", hidden},           {"position_dim", position_dim}, {"gcn_layers", gcn_layers},
                        {"train_tables", train_tables}, {"use_positions", use_positions}, {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.hidden = j.at("hidden").get<Eigen::Index>();
  c.position_dim = j.at("position_dim").get<Eigen::Index>();
  c.gcn_layers = j.at("gcn_layers").get<int>();
  c.train_tables = j.at("train_tables").get<bool>();
  c.use_positions = j.at("use_positions").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

TaxonomyModel::TaxonomyModel(std::unique_ptr<RelationEncoder> encoder, const HeteroGraph& graph, NodeEmbeddings nodes,
                             const ModelConfig& config)
    : config_(config),
      encoder_(std::move(encoder)),
      index_(std::move(nodes.index)),
      adjacency_(propagation_matrix(graph, index_)),
      nodes_("structural.nodes", std::move(nodes.table)),
      gcn_(config.gcn_layers, nodes_.value.cols(), config.seed),
      positions_(config.position_dim, config.seed) {
  if (index_.size() != nodes_.value.rows()) throw Error(ErrorKind::ShapeMismatch, "node table rows != graph nodes");
  if (!config_.use_positions) {
    positions_.parent.value.setZero();
    positions_.child.value.setZero();
  }
  init_classifier();
}

void TaxonomyModel::init_classifier() {
  Rng rng = make_rng(config_.seed, "classifier.init");
  w1_ = nn::ParameterXd("classifier.w1", nn::xavier_uniform(edge_dim(), config_.hidden, rng));
  b1_ = nn::ParameterXd("classifier.b1", nn::MatrixXd::Zero(1, config_.hidden));
  w2_ = nn::ParameterXd("classifier.w2", nn::xavier_uniform(config_.hidden, 2, rng));
  b2_ = nn::ParameterXd("classifier.b2", nn::MatrixXd::Zero(1, 2));
}

Eigen::Index TaxonomyModel::edge_dim() const {
  return encoder_->dim() + 2 * (nodes_.value.cols() + config_.position_dim);
}

nn::MatrixXd TaxonomyModel::edge_reps(std::span<const Edge> pairs) {
  const auto batch = static_cast<Eigen::Index>(pairs.size());
  cache_.query_rows.clear();
  cache_.item_rows.clear();
  for (const Edge& e : pairs) {
    cache_.query_rows.push_back(index_.row(e.parent));
    cache_.item_rows.push_back(index_.row(e.child));
  }
  const nn::MatrixXd relation = encoder_->encode_pairs(pairs);
  cache_.layer_k = gcn_.forward(adjacency_, nodes_.value);
  const Eigen::Index dr = encoder_->dim();
  const Eigen::Index ds = nodes_.value.cols();
  const Eigen::Index dp = config_.position_dim;
  nn::MatrixXd e(batch, edge_dim());
  e.leftCols(dr) = relation;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto k = static_cast<std::size_t>(b);
    e.row(b).segment(dr, ds) = cache_.layer_k.row(cache_.query_rows[k]);
    e.row(b).segment(dr + ds, dp) = positions_.parent.value.row(0);
    e.row(b).segment(dr + ds + dp, ds) = cache_.layer_k.row(cache_.item_rows[k]);
    e.row(b).segment(dr + 2 * ds + dp, dp) = positions_.child.value.row(0);
  }
  cache_.edges = e;
  return e;
}

nn::RowVectorXd TaxonomyModel::edge_rep(ConceptId query, ConceptId item) {
  const Edge pair{query, item};
  return edge_reps(std::span<const Edge>(&pair, 1)).row(0);
}

nn::MatrixXd TaxonomyModel::classify(std::span<const Edge> pairs) {
  edge_reps(pairs);
  cache_.hidden = nn::sigmoid(nn::affine(cache_.edges, w1_, b1_));
  cache_.probs = nn::softmax_rows(nn::affine(cache_.hidden, w2_, b2_));
  return cache_.probs;
}

std::vector<double> TaxonomyModel::positive_scores(std::span<const Edge> pairs) {
  const nn::MatrixXd probs = classify(pairs);
  std::vector<double> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index b = 0; b < probs.rows(); ++b) out[static_cast<std::size_t>(b)] = probs(b, 1);
  return out;
}

double TaxonomyModel::loss_and_backward(std::span<const Edge> pairs, std::span<const int> labels) {
  if (pairs.size() != labels.size()) throw Error(ErrorKind::ShapeMismatch, "pairs and labels differ in length");
  const nn::MatrixXd probs = classify(pairs);
  const auto batch = static_cast<Eigen::Index>(pairs.size());
  nn::MatrixXd target(batch, 1);
  for (Eigen::Index b = 0; b < batch; ++b) target(b, 0) = labels[static_cast<std::size_t>(b)];
  const nn::LossGrad<double> bce = nn::bce_loss<double>(probs.col(1), target);

  nn::MatrixXd d_probs = nn::MatrixXd::Zero(batch, 2);
  d_probs.col(1) = bce.grad;
  const nn::MatrixXd d_logits = nn::softmax_rows_backward(probs, d_probs);
  const nn::MatrixXd d_hidden = nn::affine_backward(cache_.hidden, w2_, b2_, d_logits);
  const nn::MatrixXd d_pre = nn::sigmoid_backward(cache_.hidden, d_hidden);
  const nn::MatrixXd d_edges = nn::affine_backward(cache_.edges, w1_, b1_, d_pre);

  const Eigen::Index dr = encoder_->dim();
  const Eigen::Index ds = nodes_.value.cols();
  const Eigen::Index dp = config_.position_dim;
  encoder_->backward(d_edges.leftCols(dr));
  nn::MatrixXd d_layer = nn::MatrixXd::Zero(cache_.layer_k.rows(), cache_.layer_k.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto k = static_cast<std::size_t>(b);
    d_layer.row(cache_.query_rows[k]) += d_edges.row(b).segment(dr, ds);
    d_layer.row(cache_.item_rows[k]) += d_edges.row(b).segment(dr + ds + dp, ds);
  }
  if (config_.use_positions) {
    positions_.parent.grad.row(0) += d_edges.middleCols(dr + ds, dp).colwise().sum();
    positions_.child.grad.row(0) += d_edges.middleCols(dr + 2 * ds + dp, dp).colwise().sum();
  }
  const nn::MatrixXd d_h0 = gcn_.backward(adjacency_, d_layer);
  if (config_.train_tables) nodes_.grad += d_h0;
  return bce.loss;
}

std::vector<nn::ParameterXd*> TaxonomyModel::trainable_parameters() {
  std::vector<nn::ParameterXd*> out = encoder_->trainable_parameters(config_.train_tables);
  if (config_.train_tables) out.push_back(&nodes_);
  for (auto* p : gcn_.parameters()) out.push_back(p);
  if (config_.use_positions) {
    out.push_back(&positions_.parent);
    out.push_back(&positions_.child);
  }
  for (auto* p : {&w1_, &b1_, &w2_, &b2_}) out.push_back(p);
  return out;
}

std::vector<nn::ParameterXd*> TaxonomyModel::parameters() {
  std::vector<nn::ParameterXd*> out = encoder_->parameters();
  out.push_back(&nodes_);
  for (auto* p : gcn_.parameters()) out.push_back(p);
  out.push_back(&positions_.parent);
  out.push_back(&positions_.child);
  for (auto* p : {&w1_, &b1_, &w2_, &b2_}) out.push_back(p);
  return out;
}

void TaxonomyModel::save(const std::filesystem::path& stem) {
  nlohmann::json extra{{"encoder", encoder_->describe()}, {"model", config_.to_json()}, {"nodes", index_.concepts()}};
  const auto params = parameters();
  nn::save_checkpoint(stem, params, extra);
}

std::unique_ptr<TaxonomyModel> TaxonomyModel::load(const std::filesystem::path& stem, const HeteroGraph& graph) {
  const nlohmann::json manifest = nn::read_checkpoint_manifest(stem);
  const nlohmann::json& extra = manifest.at("extra");
  auto encoder = encoder_from_description(extra.at("encoder"));
  NodeEmbeddings nodes{NodeIndex(graph.nodes()), {}};
  if (nodes.index.concepts() != extra.at("nodes").get<std::vector<ConceptId>>()) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint node set does not match the graph");
  }
  nodes.table = nn::MatrixXd::Zero(nodes.index.size(), encoder->concept_dim());
  auto model = std::make_unique<TaxonomyModel>(std::move(encoder), graph, std::move(nodes),
                                               ModelConfig::from_json(extra.at("model")));
  const auto params = model->parameters();
  nn::load_checkpoint(stem, params);
  return model;
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"learning_rate", learning_rate}, {"momentum", momentum}, {"batch_size", batch_size},
                        {"epochs", epochs},               {"patience", patience}, {"seed", seed}};
}

nlohmann::json TrainResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : history) {
    rows.push_back({{"epoch", r.epoch},
                    {"train_loss", r.train_loss},
                    {"val_accuracy", r.val_accuracy},
                    {"val_edge_f1", r.val_edge_f1}});
  }
  return nlohmann::json{{"history", rows}, {"best_epoch", best_epoch}, {"best_val_edge_f1", best_val_edge_f1}};
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  double edge_f1 = 0.0;
};

Evaluation evaluate_pairs(TaxonomyModel& model, std::span<const LabeledPair> pairs) {
  Evaluation out;
  if (pairs.empty()) return out;
  std::vector<Edge> edges;
  for (const auto& p : pairs) edges.push_back(p.edge());
  const std::vector<double> scores = model.positive_scores(edges);
  LabelMap predicted;
  LabelMap gold;
  EdgeSet predicted_pos;
  EdgeSet gold_pos;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const int label = scores[k] >= 0.5 ? 1 : 0;
    predicted[edges[k]] = label;
    gold[edges[k]] = pairs[k].label();
    if (label == 1) predicted_pos.insert(edges[k]);
    if (pairs[k].positive()) gold_pos.insert(edges[k]);
    const double p = std::clamp(scores[k], 1e-12, 1.0 - 1e-12);
    out.loss -= pairs[k].positive() ? std::log(p) : std::log(1.0 - p);
  }
  out.loss /= static_cast<double>(pairs.size());
  out.accuracy = accuracy(predicted, gold);
  out.edge_f1 = gold_pos.empty() ? out.accuracy : edge_f1(predicted_pos, gold_pos).f1;
  return out;
}

}  // namespace

TrainResult train(TaxonomyModel& model, const DatasetSplit& split, const TrainConfig& config) {
  if (split.train.empty()) throw Error(ErrorKind::EmptyTrainSet, "training split is empty");
  if (config.batch_size < 1 || config.epochs < 0) throw Error(ErrorKind::ConfigInvalid, "bad batch size or epochs");
  TrainResult result;
  nn::OptimStateXd state;
  state.learning_rate = config.learning_rate;
  state.momentum = config.momentum;
  const auto trainable = model.trainable_parameters();
  const auto everything = model.parameters();

  std::vector<nn::MatrixXd> best;
  auto snapshot = [&]() {
    best.clear();
    for (auto* p : everything) best.push_back(p->value);
  };
  snapshot();
  double best_f1 = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::size_t> order(split.train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng = make_rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)), "classifier.batches");
    shuffle_in_place(order, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Edge> edges;
      std::vector<int> labels;
      for (std::size_t k = start; k < stop; ++k) {
        edges.push_back(split.train[order[k]].edge());
        labels.push_back(split.train[order[k]].label());
      }
      for (auto* p : everything) p->zero_grad();
      const double loss = model.loss_and_backward(edges, labels);
      if (!std::isfinite(loss)) throw Error(ErrorKind::NonFiniteLoss, "training loss is not finite");
      total += loss * static_cast<double>(edges.size());
      nn::opt_step<double>(trainable, state);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = total / static_cast<double>(order.size());
    const Evaluation val = evaluate_pairs(model, split.val.empty() ? std::span<const LabeledPair>(split.train)
                                                                   : std::span<const LabeledPair>(split.val));
    record.val_accuracy = val.accuracy;
    record.val_edge_f1 = val.edge_f1;
    result.history.push_back(record);
    spdlog::debug("epoch {} loss {:.5f} val acc {:.4f} val edge-f1 {:.4f}", epoch, record.train_loss, val.accuracy,
                  val.edge_f1);

    const bool better = val.edge_f1 > best_f1 + 1e-12 || (std::abs(val.edge_f1 - best_f1) <= 1e-12 && val.loss < best_loss);
    if (better) {
      best_f1 = val.edge_f1;
      best_loss = val.loss;
      result.best_epoch = epoch;
      result.best_val_edge_f1 = val.edge_f1;
      since_best = 0;
      snapshot();
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  for (std::size_t k = 0; k < everything.size(); ++k) everything[k]->value = best[k];
  for (auto* p : everything) p->zero_grad();
  return result;
}

void validate_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "threshold must lie strictly between 0 and 1");
  }
}

std::vector<ScoredEdge> predict_edges(std::span<const Edge> candidates, TaxonomyModel& model, double threshold) {
  validate_threshold(threshold);
  std::vector<ScoredEdge> out;
  if (candidates.empty()) return out;
  const std::vector<double> scores = model.positive_scores(candidates);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (scores[k] >= threshold) out.push_back(ScoredEdge{candidates[k], scores[k]});
  }
  std::sort(out.begin(), out.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.edge < b.edge;
  });
  return out;
}

}  // namespace taxograft
