#include "taxograft/structural.hpp"

#include <cmath>

#include "taxograft/error.hpp"

namespace taxograft {

NodeIndex::NodeIndex(const std::set<ConceptId>& nodes) : concepts_(nodes.begin(), nodes.end()) {
  for (std::size_t r = 0; r < concepts_.size(); ++r) rows_.emplace(concepts_[r], static_cast<Eigen::Index>(r));
}

Eigen::Index NodeIndex::row(ConceptId c) const {
  auto it = rows_.find(c);
  if (it == rows_.end()) throw Error(ErrorKind::UnknownNode, "concept id " + std::to_string(c) + " is not a graph node");
  return it->second;
}

NodeEmbeddings init_embeddings(const HeteroGraph& graph, const RelationEncoder& encoder) {
  NodeEmbeddings out{NodeIndex(graph.nodes()), {}};
  out.table.resize(out.index.size(), encoder.concept_dim());
  for (Eigen::Index r = 0; r < out.index.size(); ++r) {
    const ConceptId c = out.index.concept_at(r);
    if (!encoder.knows(c)) {
      throw Error(ErrorKind::MissingEmbedding, "encoder has no vector for graph node " + std::to_string(c));
    }
    out.table.row(r) = encoder.encode_concept(c);
  }
  return out;
}

double cosine(const nn::RowVectorXd& u, const nn::RowVectorXd& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

namespace {

// S(u, v) and its gradients with respect to u and v.
struct CosineGrad {
  double value = 0.0;
  nn::RowVectorXd du;
  nn::RowVectorXd dv;
};

CosineGrad cosine_with_grad(const nn::RowVectorXd& u, const nn::RowVectorXd& v) {
  CosineGrad g;
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    g.du = nn::RowVectorXd::Zero(u.size());
    g.dv = nn::RowVectorXd::Zero(v.size());
    return g;
  }
  g.value = u.dot(v) / (nu * nv);
  g.du = v / (nu * nv) - g.value * u / (nu * nu);
  g.dv = u / (nu * nv) - g.value * v / (nv * nv);
  return g;
}

}  // namespace

InfoNceResult infonce_loss(Eigen::Index anchor, std::span<const Eigen::Index> neighbors,
                           std::span<const Eigen::Index> negatives, const nn::MatrixXd& table) {
  if (neighbors.empty()) {
    throw Error(ErrorKind::IsolatedNode, "anchor row " + std::to_string(anchor) + " has no neighbors");
  }
  const nn::RowVectorXd u = table.row(anchor);
  std::vector<CosineGrad> pos;
  std::vector<CosineGrad> neg;
  for (Eigen::Index v : neighbors) pos.push_back(cosine_with_grad(u, table.row(v)));
  for (Eigen::Index w : negatives) neg.push_back(cosine_with_grad(u, table.row(w)));

  // Similarities lie in [-1, 1]; no max-shift is needed for stability.
  double p_sum = 0.0;
  for (const auto& g : pos) p_sum += std::exp(g.value);
  double q_sum = 0.0;
  for (const auto& g : neg) q_sum += std::exp(g.value);
  const double all = p_sum + q_sum;

  InfoNceResult out;
  out.loss = -std::log(p_sum) + std::log(all);
  auto add = [&](Eigen::Index row, const nn::RowVectorXd& g) {
    auto [it, inserted] = out.grads.try_emplace(row, g);
    if (!inserted) it->second += g;
  };
  nn::RowVectorXd du = nn::RowVectorXd::Zero(u.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const double e = std::exp(pos[k].value);
    const double coeff = -e / p_sum + e / all;
    du += coeff * pos[k].du;
    add(neighbors[k], coeff * pos[k].dv);
  }
  for (std::size_t k = 0; k < neg.size(); ++k) {
    const double coeff = std::exp(neg[k].value) / all;
    du += coeff * neg[k].du;
    add(negatives[k], coeff * neg[k].dv);
  }
  add(anchor, du);
  return out;
}

std::vector<Eigen::Index> sample_contrastive_negatives(Eigen::Index anchor, std::span<const Eigen::Index> neighbors,
                                                       Eigen::Index n_nodes, double negative_rate, Rng& rng) {
  std::vector<bool> blocked(static_cast<std::size_t>(n_nodes), false);
  blocked[static_cast<std::size_t>(anchor)] = true;
  for (Eigen::Index v : neighbors) blocked[static_cast<std::size_t>(v)] = true;
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index r = 0; r < n_nodes; ++r) {
    if (!blocked[static_cast<std::size_t>(r)]) candidates.push_back(r);
  }
  std::vector<Eigen::Index> out;
  if (candidates.empty()) return out;
  const auto count = static_cast<std::size_t>(std::ceil(negative_rate * static_cast<double>(neighbors.size()) - 1e-9));
  for (std::size_t k = 0; k < count; ++k) out.push_back(candidates[uniform_index(rng, candidates.size())]);
  return out;
}

ContrastiveReport contrastive_pretrain(const HeteroGraph& graph, NodeEmbeddings& embeddings,
                                       const ContrastiveOptions& options) {
  if (options.negative_rate <= 0.0) throw Error(ErrorKind::ConfigInvalid, "negative_rate must be > 0");
  ContrastiveReport report;
  const NodeIndex& index = embeddings.index;
  const Eigen::Index n = index.size();
  std::vector<Eigen::Index> anchors;
  std::vector<std::vector<Eigen::Index>> neighbor_rows(static_cast<std::size_t>(n));
  std::vector<std::vector<Eigen::Index>> negative_rows(static_cast<std::size_t>(n));
  Rng rng = make_rng(options.seed, "structural.contrastive");
  for (Eigen::Index r = 0; r < n; ++r) {
    const ConceptId c = index.concept_at(r);
    for (const auto& [v, w] : graph.neighbors(c)) {
      if (index.contains(v)) neighbor_rows[static_cast<std::size_t>(r)].push_back(index.row(v));
    }
    if (neighbor_rows[static_cast<std::size_t>(r)].empty()) {
      report.isolated.push_back(c);
      continue;
    }
    anchors.push_back(r);
    negative_rows[static_cast<std::size_t>(r)] =
        sample_contrastive_negatives(r, neighbor_rows[static_cast<std::size_t>(r)], n, options.negative_rate, rng);
  }
  if (anchors.empty()) return report;

  const double scale = 1.0 / static_cast<double>(anchors.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    nn::MatrixXd grad = nn::MatrixXd::Zero(embeddings.table.rows(), embeddings.table.cols());
    double total = 0.0;
    for (Eigen::Index a : anchors) {
      InfoNceResult r = infonce_loss(a, neighbor_rows[static_cast<std::size_t>(a)],
                                     negative_rows[static_cast<std::size_t>(a)], embeddings.table);
      if (!std::isfinite(r.loss)) throw Error(ErrorKind::NonFiniteLoss, "InfoNCE loss is not finite");
      total += r.loss;
      for (const auto& [row, g] : r.grads) grad.row(row) += g;
    }
    report.losses.push_back(total * scale);
    embeddings.table -= options.learning_rate * scale * grad;
  }
  return report;
}

SparseMatrixXd propagation_matrix(const HeteroGraph& graph, const NodeIndex& index) {
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index r = 0; r < index.size(); ++r) {
    entries.emplace_back(r, r, 1.0);
    for (const auto& [v, w] : graph.neighbors(index.concept_at(r))) {
      if (index.contains(v)) entries.emplace_back(r, index.row(v), w);
    }
  }
  SparseMatrixXd a(index.size(), index.size());
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

GcnStack::GcnStack(int layers, Eigen::Index dim, std::uint64_t seed) : dim_(dim) {
  if (layers < 1) throw Error(ErrorKind::ConfigInvalid, "GCN needs at least one layer");
  Rng rng = make_rng(seed, "structural.gcn");
  for (int k = 0; k < layers; ++k) {
    weights_.emplace_back("structural.gcn_w" + std::to_string(k), nn::xavier_uniform(dim, dim, rng));
  }
}

nn::MatrixXd GcnStack::forward(const SparseMatrixXd& adjacency, const nn::MatrixXd& h0) {
  nn::require_shape(adjacency.cols() == h0.rows() && h0.cols() == dim_, "gcn_forward: input shape");
  aggregated_.clear();
  pre_.clear();
  nn::MatrixXd h = h0;
  for (auto& w : weights_) {
    aggregated_.push_back(adjacency * h);
    pre_.push_back(aggregated_.back() * w.value);
    h = nn::relu(pre_.back());
  }
  return h;
}

nn::MatrixXd GcnStack::backward(const SparseMatrixXd& adjacency, const nn::MatrixXd& d_out) {
  nn::MatrixXd d = d_out;
  for (std::size_t k = weights_.size(); k-- > 0;) {
    const nn::MatrixXd d_pre = nn::relu_backward(pre_[k], d);
    weights_[k].grad.noalias() += aggregated_[k].transpose() * d_pre;
    const nn::MatrixXd d_agg = d_pre * weights_[k].value.transpose();
    d = adjacency.transpose() * d_agg;
  }
  return d;
}

std::vector<nn::ParameterXd*> GcnStack::parameters() {
  std::vector<nn::ParameterXd*> out;
  for (auto& w : weights_) out.push_back(&w);
  return out;
}

PositionEmbeddings::PositionEmbeddings(Eigen::Index dim, std::uint64_t seed) {
  Rng rng = make_rng(seed, "structural.positions");
  parent = nn::ParameterXd("structural.p_parent", nn::xavier_uniform(1, dim, rng));
  child = nn::ParameterXd("structural.p_child", nn::xavier_uniform(1, dim, rng));
}

nn::RowVectorXd struct_pair(ConceptId query, ConceptId item, const NodeIndex& index, const nn::MatrixXd& layer_k,
                            const PositionEmbeddings& positions) {
  const Eigen::Index ds = layer_k.cols();
  const Eigen::Index dp = positions.parent.value.cols();
  nn::RowVectorXd out(2 * (ds + dp));
  out << layer_k.row(index.row(query)), positions.parent.value.row(0), layer_k.row(index.row(item)),
      positions.child.value.row(0);
  return out;
}

}  // namespace taxograft
