#include "taxograft/metrics.hpp"

#include <algorithm>

#include "taxograft/error.hpp"

namespace taxograft {

double harmonic_f1(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double accuracy(const LabelMap& predicted, const LabelMap& gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorKind::UniverseMismatch, "prediction and gold cover different pair sets");
  }
  if (gold.empty()) return 0.0;
  std::size_t hits = 0;
  auto p = predicted.begin();
  for (auto g = gold.begin(); g != gold.end(); ++g, ++p) {
    if (p->first != g->first) throw Error(ErrorKind::UniverseMismatch, "prediction and gold cover different pair sets");
    if (p->second == g->second) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

namespace {

Prf score_against(const EdgeSet& predicted, const EdgeSet& gold) {
  if (gold.empty()) throw Error(ErrorKind::EmptyGold, "gold edge set is empty");
  std::size_t overlap = 0;
  for (const Edge& e : predicted) overlap += gold.count(e);
  Prf out;
  out.precision = predicted.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(predicted.size());
  out.recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

}  // namespace

Prf edge_f1(const EdgeSet& predicted, const EdgeSet& gold) { return score_against(predicted, gold); }

Prf ancestor_f1(const EdgeSet& predicted, const Taxonomy& gold) {
  if (auto cycle = gold.find_cycle()) throw Error(ErrorKind::CycleDetected, "gold taxonomy has a cycle");
  return score_against(predicted, gold.closure());
}

nlohmann::json Metrics::to_json() const {
  auto prf = [](const Prf& p) { return nlohmann::json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; };
  return nlohmann::json{{"accuracy", accuracy}, {"edge", prf(edge)}, {"ancestor", prf(ancestor)}, {"per_pattern", per_pattern}};
}

Metrics Metrics::from_json(const nlohmann::json& j) {
  auto prf = [](const nlohmann::json& p) {
    return Prf{p.at("precision").get<double>(), p.at("recall").get<double>(), p.at("f1").get<double>()};
  };
  Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.edge = prf(j.at("edge"));
  m.ancestor = prf(j.at("ancestor"));
  m.per_pattern = j.at("per_pattern").get<std::map<std::string, double>>();
  return m;
}

}  // namespace taxograft
