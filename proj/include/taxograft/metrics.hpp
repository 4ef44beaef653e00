#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "taxograft/taxonomy.hpp"

namespace taxograft {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const Prf&) const = default;
};

// Harmonic mean; 0 when both inputs are 0.
double harmonic_f1(double precision, double recall);

using LabelMap = std::map<Edge, int>;

// Fraction of pairs whose predicted label equals the gold label. Both maps must
// cover the same pairs.
double accuracy(const LabelMap& predicted, const LabelMap& gold);

// P = |pred ∩ gold| / |pred| (0 for empty pred), R = |pred ∩ gold| / |gold|.
Prf edge_f1(const EdgeSet& predicted, const EdgeSet& gold);

// As edge_f1, against every (ancestor, descendant) pair of the gold taxonomy.
Prf ancestor_f1(const EdgeSet& predicted, const Taxonomy& gold);

struct Metrics {
  double accuracy = 0.0;
  Prf edge;
  Prf ancestor;
  std::map<std::string, double> per_pattern;  // accuracy per pair kind

  nlohmann::json to_json() const;
  static Metrics from_json(const nlohmann::json& j);
  bool operator==(const Metrics&) const = default;
};

}  // namespace taxograft
