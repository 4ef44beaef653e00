// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gating criterion fails; criterion 7 is informative only.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>

#include <fmt/format.h>

#include "cli_util.hpp"
#include "graph_util.hpp"
#include "taxograft/click_graph.hpp"
#include "taxograft/corpus_io.hpp"
#include "taxograft/expander.hpp"
#include "taxograft/metrics.hpp"
#include "taxograft/model.hpp"
#include "taxograft/nn.hpp"
#include "taxograft/selfsup.hpp"
#include "taxograft/structural.hpp"

namespace fs = std::filesystem;
using namespace taxograft;
using testing::reach_matrix;
using testing::run_cli;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("taxograft_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

nn::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  nn::MatrixXd m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = 2.0 * uniform01(rng) - 1.0;
  return m;
}

// ---- 1 ----------------------------------------------------------------------

Verdict formula_oracles() {
  Verdict v;
  const auto t0 = Clock::now();
  // q1 -> a x3, q1 -> b x1, q2 -> b x1; weights from an independent script.
  const std::vector<ClickTriple> worked = {{0, 2, 3}, {0, 3, 1}, {1, 3, 1}};
  const auto f = compute_if(worked);
  const auto iqf = compute_iqf(worked);
  const auto w = assign_weights(worked, f, iqf);
  std::map<std::pair<ConceptId, ConceptId>, double> got;
  for (const auto& e : w) got[{e.query_concept, e.item_concept}] = e.weight;
  v.require(std::abs(f.at({0, 2}) - 0.75) < 1e-12 && std::abs(f.at({0, 3}) - 0.25) < 1e-12, "IF mismatch");
  v.require(std::abs(iqf.at(2) - 0.6931471805599453) < 1e-12 && std::abs(iqf.at(3)) < 1e-12, "IQF mismatch");
  v.require(std::abs(f.at({0, 2}) * iqf.at(2) * iqf.at(2) - 0.360339760438651) < 1e-9, "raw score mismatch");
  v.require(std::abs(got.at({0, 2}) - 0.5891226779911239) < 1e-9, "weight(q1,a) mismatch");
  v.require(std::abs(got.at({0, 3}) - 0.4108773220088761) < 1e-9, "weight(q1,b) mismatch");
  v.require(std::abs(got.at({1, 3}) - 1.0) < 1e-9, "weight(q2,b) mismatch");

  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::map<std::pair<ConceptId, ConceptId>, std::int64_t> counts;
    const int rows = 1 + static_cast<int>(rng() % 60);
    for (int k = 0; k < rows; ++k) {
      counts[{static_cast<ConceptId>(rng() % 12), static_cast<ConceptId>(20 + rng() % 25)}] +=
          1 + static_cast<std::int64_t>(rng() % 50);
    }
    std::vector<ClickTriple> t;
    for (const auto& [pair, c] : counts) t.push_back({pair.first, pair.second, c});
    std::map<ConceptId, double> sums;
    for (const auto& e : assign_weights(t, compute_if(t), compute_iqf(t))) sums[e.query_concept] += e.weight;
    for (const auto& [q, s] : sums) worst = std::max(worst, std::abs(s - 1.0));
  }
  v.require(worst <= 1e-9, fmt::format("weight sum off by {:.3g}", worst));
  const double secs = seconds_since(t0);
  v.require(secs < 5.0, fmt::format("took {:.2f}s", secs));
  if (v.pass) v.detail = fmt::format("weights ({:.10f}, {:.10f}); worst sum error {:.2g}; {:.2f}s", got.at({0, 2}),
                                     got.at({0, 3}), worst, secs);
  return v;
}

// ---- 2 ----------------------------------------------------------------------

Verdict gradient_integrity() {
  Verdict v;
  const auto t0 = Clock::now();
  const double h = 1e-5, tol = 1e-4;
  std::vector<std::string> parts;
  auto record = [&](const std::string& name, const nn::GradCheckReport& r) {
    v.require(r.passed, fmt::format("{} rel-err {:.3g} ({})", name, r.max_relative_error, r.worst_parameter));
    parts.push_back(fmt::format("{} {:.1e}", name, r.max_relative_error));
  };

  {
    nn::ParameterXd W("w", random_matrix(4, 3, 1)), B("b", random_matrix(1, 3, 2));
    const nn::MatrixXd x = random_matrix(5, 4, 3), c = random_matrix(5, 3, 4);
    std::vector<nn::ParameterXd*> p = {&W, &B};
    record("affine", nn::grad_check<double>(
                         [&] {
                           auto y = nn::affine(x, W, B);
                           nn::affine_backward(x, W, B, c);
                           return (y.array() * c.array()).sum();
                         },
                         p, h, tol));
  }
  {
    nn::ParameterXd x("x", random_matrix(3, 4, 5));
    const nn::MatrixXd c = random_matrix(3, 4, 6);
    std::vector<nn::ParameterXd*> p = {&x};
    record("relu", nn::grad_check<double>(
                       [&] {
                         auto y = nn::relu(x.value);
                         x.grad += nn::relu_backward(x.value, c);
                         return (y.array() * c.array()).sum();
                       },
                       p, h, tol));
    record("sigmoid", nn::grad_check<double>(
                          [&] {
                            auto y = nn::sigmoid(x.value);
                            x.grad += nn::sigmoid_backward(y, c);
                            return (y.array() * c.array()).sum();
                          },
                          p, h, tol));
    record("softmax", nn::grad_check<double>(
                          [&] {
                            auto y = nn::softmax_rows(x.value);
                            x.grad += nn::softmax_rows_backward(y, c);
                            return (y.array() * c.array()).sum();
                          },
                          p, h, tol));
  }
  {
    nn::ParameterXd pred("p", (random_matrix(6, 1, 7).array() * 0.45 + 0.5).matrix());
    const nn::MatrixXd t = (random_matrix(6, 1, 8).array() > 0).cast<double>().matrix();
    std::vector<nn::ParameterXd*> p = {&pred};
    record("bce", nn::grad_check<double>(
                      [&] {
                        auto lg = nn::bce_loss(pred.value, t);
                        pred.grad += lg.grad;
                        return lg.loss;
                      },
                      p, h, tol));
  }
  {
    nn::ParameterXd table("table", random_matrix(8, 5, 9));
    const std::vector<Eigen::Index> nb = {1, 2, 3}, neg = {4, 5, 6, 7};
    std::vector<nn::ParameterXd*> p = {&table};
    record("infonce", nn::grad_check<double>(
                          [&] {
                            auto r = infonce_loss(0, nb, neg, table.value);
                            for (const auto& [row, g] : r.grads) table.grad.row(row) += g;
                            return r.loss;
                          },
                          p, h, tol));
  }

  // Ten-node taxonomy with click edges shared by the GCN and full-model checks.
  Taxonomy tax;
  for (ConceptId c = 1; c < 10; ++c) tax.add_edge((c - 1) / 3, c);
  const HeteroGraph graph(tax, {ClickEdge{0, 5, 2, 0.7}, ClickEdge{0, 9, 1, 0.3}, ClickEdge{2, 4, 1, 1.0}});
  {
    NodeIndex index(graph.nodes());
    const auto adj = propagation_matrix(graph, index);
    GcnStack gcn(1, 4, 3);
    nn::ParameterXd h0("h0", random_matrix(10, 4, 10));
    const nn::MatrixXd c = random_matrix(10, 4, 11);
    auto p = gcn.parameters();
    p.push_back(&h0);
    record("gcn", nn::grad_check<double>(
                      [&] {
                        auto out = gcn.forward(adj, h0.value);
                        h0.grad += gcn.backward(adj, c);
                        return (out.array() * c.array()).sum();
                      },
                      p, h, tol));
  }
  {
    auto enc = std::make_unique<ReferenceEncoder>(10, std::vector<std::string>{"w"}, 6, 5);
    auto nodes = init_embeddings(graph, *enc);
    ModelConfig mc;
    mc.hidden = 6;
    mc.position_dim = 3;
    mc.train_tables = true;
    mc.seed = 5;
    TaxonomyModel model(std::move(enc), graph, std::move(nodes), mc);
    const std::vector<Edge> pairs = {{0, 1}, {1, 0}, {0, 5}, {2, 4}, {4, 2}, {3, 9}, {1, 7}, {8, 2}};
    const std::vector<int> labels = {1, 0, 1, 1, 0, 0, 0, 0};
    auto p = model.trainable_parameters();
    record("full model", nn::grad_check<double>([&] { return model.loss_and_backward(pairs, labels); }, p, h, tol));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 30.0, fmt::format("took {:.2f}s", secs));
  if (v.pass) {
    v.detail.clear();
    for (const auto& s : parts) v.detail += s + "; ";
    v.detail += fmt::format("{:.2f}s", secs);
  }
  return v;
}

// ---- 3 ----------------------------------------------------------------------

Verdict dataset_invariants(const fs::path& work) {
  Verdict v;
  std::string summary;
  for (int per_positive : {1, 2}) {
    const fs::path dir = work / fmt::format("pp{}", per_positive);
    auto config = testing::rebased_config(work / "data", dir);
    config["dataset"]["per_positive"] = per_positive;
    const auto path = testing::write_config(dir.string() + ".json", config);
    if (!fs::exists(work / "data" / "vocab.txt")) {
      auto r = run_cli("synth --config \"" + path.string() + "\"");
      v.require(r.code == 0, "synth failed: " + r.output);
    }
    for (const char* stage : {"build-graph", "make-dataset"}) {
      auto r = run_cli(std::string(stage) + " --config \"" + path.string() + "\"");
      v.require(r.code == 0, std::string(stage) + " failed: " + r.output);
    }
    if (!v.pass) return v;

    ConceptVocabulary vocab = load_vocabulary(dir / "build-graph" / "vocab.txt");
    const Taxonomy taxonomy = load_taxonomy(dir / "build-graph" / "taxonomy.tsv", vocab).taxonomy;
    std::map<std::string, std::vector<LabeledPair>> parts;
    std::vector<LabeledPair> all;
    for (const char* name : {"train", "val", "test"}) {
      auto in = open_input(dir / "make-dataset" / (std::string(name) + ".jsonl"));
      parts[name] = read_pairs_jsonl(in, vocab);
      all.insert(all.end(), parts[name].begin(), parts[name].end());
    }
    std::map<PairKind, std::size_t> n;
    for (const auto& p : all) ++n[p.kind];
    const std::size_t pos = n[PairKind::Headword] + n[PairKind::Other];
    const std::size_t neg = n[PairKind::Shuffle] + n[PairKind::Replace];
    v.require(neg == pos * static_cast<std::size_t>(per_positive),
              fmt::format("pos:neg {}:{} at per_positive {}", pos, neg, per_positive));
    const auto s = n[PairKind::Shuffle], r = n[PairKind::Replace];
    v.require((s > r ? s - r : r - s) <= 1, fmt::format("shuffle:replace {}:{}", s, r));
    const double share = static_cast<double>(n[PairKind::Headword]) / static_cast<double>(pos);
    v.require(share <= 0.3 + 1.0 / static_cast<double>(pos), fmt::format("headword share {:.3f}", share));

    std::map<PairKind, std::map<std::string, std::size_t>> strata;
    for (const auto& [name, pairs] : parts) {
      for (const auto& p : pairs) ++strata[p.kind][name];
    }
    for (const auto& [kind, counts] : strata) {
      const double total = static_cast<double>(n[kind]);
      for (const auto& [name, frac] : std::map<std::string, double>{{"train", 0.6}, {"val", 0.2}, {"test", 0.2}}) {
        const double got = static_cast<double>(counts.count(name) ? counts.at(name) : 0);
        v.require(std::abs(got - frac * total) <= 1.0,
                  fmt::format("{} {} has {} of {}", to_string(kind), name, got, total));
      }
    }

    // Closure oracle: dense reachability over the input taxonomy.
    const int size = static_cast<int>(vocab.size());
    const auto reach = reach_matrix(taxonomy, size);
    std::size_t bad = 0;
    std::set<std::pair<Edge, int>> seen;
    std::set<Edge> positives;
    for (const auto& p : all) {
      if (p.positive()) positives.insert(p.edge());
    }
    for (const auto& p : all) {
      if (p.kind == PairKind::Replace && (p.query == p.item || reach[p.query][p.item] || reach[p.item][p.query])) ++bad;
      if (p.kind == PairKind::Shuffle && !positives.count(Edge{p.item, p.query})) ++bad;
      seen.insert({p.edge(), p.label()});
    }
    for (const auto& [e, label] : seen) {
      if (label == 0 && seen.count({e, 1})) ++bad;
    }
    v.require(bad == 0, fmt::format("{} pairs violate closure / reversal / label rules", bad));
    summary += fmt::format("per_positive {}: {} pos ({} headword, share {:.3f}), {} shuffle, {} replace, split {}/{}/{}; ",
                           per_positive, pos, n[PairKind::Headword], share, n[PairKind::Shuffle], n[PairKind::Replace],
                           parts["train"].size(), parts["val"].size(), parts["test"].size());
  }
  if (v.pass) v.detail = summary.substr(0, summary.size() - 2);
  return v;
}

// ---- 4 ----------------------------------------------------------------------

Verdict metric_oracles() {
  Verdict v;
  std::mt19937_64 rng(77);
  std::size_t instances = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int nodes = 4 + static_cast<int>(rng() % 9);
    Taxonomy gold;
    std::vector<Edge> gold_list;
    for (int k = 0; k < 30 && gold_list.size() < 1 + rng() % 30; ++k) {
      ConceptId a = static_cast<ConceptId>(rng() % nodes), b = static_cast<ConceptId>(rng() % nodes);
      if (a >= b) continue;
      if (gold.add_edge(a, b)) gold_list.push_back({a, b});
    }
    if (gold_list.empty()) gold_list.push_back({0, 1}), gold.add_edge(0, 1);
    std::vector<Edge> pred_list;
    EdgeSet pred;
    const int n_pred = static_cast<int>(rng() % 31);
    for (int k = 0; k < n_pred; ++k) {
      ConceptId a = static_cast<ConceptId>(rng() % nodes), b = static_cast<ConceptId>(rng() % nodes);
      if (a != b && pred.insert({a, b}).second) pred_list.push_back({a, b});
    }

    // Brute force: nested scans and dense reachability.
    auto prf = [](std::size_t hit, std::size_t np, std::size_t ng) {
      const double p = np == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(np);
      const double r = static_cast<double>(hit) / static_cast<double>(ng);
      return Prf{p, r, p + r == 0.0 ? 0.0 : 2 * p * r / (p + r)};
    };
    std::size_t hit = 0;
    for (const Edge& a : pred_list) {
      for (const Edge& b : gold_list) hit += a == b ? 1 : 0;
    }
    const Prf edge_expected = prf(hit, pred_list.size(), gold_list.size());
    const auto reach = reach_matrix(gold, nodes);
    std::size_t closure = 0, anc_hit = 0;
    for (int a = 0; a < nodes; ++a) {
      for (int b = 0; b < nodes; ++b) closure += reach[a][b] ? 1 : 0;
    }
    for (const Edge& e : pred_list) anc_hit += reach[e.parent][e.child] ? 1 : 0;
    const Prf anc_expected = prf(anc_hit, pred_list.size(), closure);

    auto close = [](const Prf& x, const Prf& y) {
      return std::abs(x.precision - y.precision) < 1e-12 && std::abs(x.recall - y.recall) < 1e-12 &&
             std::abs(x.f1 - y.f1) < 1e-12;
    };
    const Prf edge_got = edge_f1(pred, gold.edges());
    const Prf anc_got = ancestor_f1(pred, gold);
    v.require(close(edge_got, edge_expected), fmt::format("edge_f1 differs on instance {}", trial));
    v.require(close(anc_got, anc_expected), fmt::format("ancestor_f1 differs on instance {}", trial));
    v.require(anc_got.precision >= edge_got.precision, fmt::format("ancestor P < edge P on instance {}", trial));

    LabelMap lp, lg;
    std::size_t agree = 0;
    for (const Edge& e : gold_list) {
      const int g = static_cast<int>(rng() % 2), p = static_cast<int>(rng() % 2);
      lg[e] = g;
      lp[e] = p;
      agree += g == p ? 1 : 0;
    }
    v.require(std::abs(accuracy(lp, lg) - static_cast<double>(agree) / static_cast<double>(gold_list.size())) < 1e-12,
              fmt::format("accuracy differs on instance {}", trial));
    ++instances;
  }
  if (v.pass) v.detail = fmt::format("{} random instances agree with brute force", instances);
  return v;
}

// ---- 5 ----------------------------------------------------------------------

Verdict expansion_correctness() {
  Verdict v;
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const Taxonomy t = testing::random_dag(30, 0.12, rng);
    const Taxonomy r = transitive_reduce(t);
    v.require(reach_matrix(t, 30) == reach_matrix(r, 30), fmt::format("reachability changed on DAG {}", trial));
    for (const Edge& e : r.edges()) {
      Taxonomy without = r;
      without.remove_edge(e);
      v.require(!without.reaches(e.parent, e.child), fmt::format("redundant edge kept on DAG {}", trial));
    }

    // Random clicks over the same nodes plus some new ones; accept everything.
    std::vector<ClickEdge> clicks;
    for (int k = 0; k < 60; ++k) {
      ConceptId a = static_cast<ConceptId>(rng() % 36), b = static_cast<ConceptId>(rng() % 36);
      if (a != b) clicks.push_back(ClickEdge{a, b, 1, 0.5});
    }
    const HeteroGraph g(t, clicks);
    auto res = expand_taxonomy(t, g, [](std::span<const Edge> c) { return std::vector<double>(c.size(), 0.9); });
    v.require(!res.expanded.find_cycle(), fmt::format("cyclic expansion on DAG {}", trial));
    const auto before = reach_matrix(t, 36), after = reach_matrix(res.expanded, 36);
    for (int a = 0; a < 36; ++a) {
      for (int b = 0; b < 36; ++b) {
        if (before[a][b] && !after[a][b]) v.require(false, fmt::format("reachability lost on DAG {}", trial));
      }
    }
    for (const Edge& e : res.added_edges()) {
      Taxonomy without = res.expanded;
      without.remove_edge(e);
      v.require(!without.reaches(e.parent, e.child), fmt::format("redundant added edge on DAG {}", trial));
    }
  }

  // Three-level fixture: root -> a -> b; clicks attach c under b and d under c.
  Taxonomy fixture;
  fixture.add_edge(0, 1);
  fixture.add_edge(1, 2);
  const HeteroGraph g(fixture, {ClickEdge{2, 3, 4, 1.0}, ClickEdge{3, 4, 4, 1.0}, ClickEdge{0, 4, 1, 1.0}});
  auto res = expand_taxonomy(fixture, g, [](std::span<const Edge> c) { return std::vector<double>(c.size(), 0.9); });
  const std::size_t depth_before = fixture.levels().size(), depth_after = res.expanded.levels().size();
  v.require(depth_after > depth_before, fmt::format("depth {} -> {}", depth_before, depth_after));
  v.require(res.added_edges() == EdgeSet{{2, 3}, {3, 4}}, "three-level fixture additions differ");
  if (v.pass) {
    v.detail = fmt::format("100 random DAGs reduced and expanded; fixture depth {} -> {} levels", depth_before,
                           depth_after);
  }
  return v;
}

// ---- 6, 7, 8 ------------------------------------------------------------------

struct RunOutcome {
  bool ok = false;
  double seconds = 0.0;
  nlohmann::json report;
  std::string output;
};

RunOutcome run_all(const fs::path& work, const std::string& name, const std::function<void(nlohmann::json&)>& edit) {
  auto config = testing::rebased_config(work / "data", work / name);
  edit(config);
  const auto path = testing::write_config(work / (name + ".json"), config);
  RunOutcome out;
  const auto t0 = Clock::now();
  if (!fs::exists(work / "data" / "vocab.txt")) {
    auto r = run_cli("synth --config \"" + path.string() + "\"");
    if (r.code != 0) {
      out.output = r.output;
      return out;
    }
  }
  auto r = run_cli("all --config \"" + path.string() + "\"");
  out.seconds = seconds_since(t0);
  out.output = r.output;
  out.ok = r.code == 0;
  if (out.ok) out.report = nlohmann::json::parse(read_bytes(work / name / "report.json"));
  return out;
}

Verdict end_to_end(const fs::path& work) {
  Verdict v;
  auto run = run_all(work, "full", [](nlohmann::json&) {});
  v.require(run.ok, "pipeline failed: " + run.output);
  if (!run.ok) return v;
  const auto& runs = run.report.at("runs");
  const double acc = runs.at("model").at("accuracy");
  const double f1 = runs.at("model").at("edge").at("f1");
  const double substr = runs.at("substr").at("edge").at("f1");
  v.require(acc >= 0.85, fmt::format("accuracy {:.4f} < 0.85", acc));
  v.require(f1 >= substr + 0.05, fmt::format("edge-F1 {:.4f} vs substr {:.4f}", f1, substr));
  v.require(run.seconds <= 600.0, fmt::format("took {:.1f}s", run.seconds));
  if (v.pass) {
    v.detail = fmt::format("accuracy {:.4f}, edge-F1 {:.4f} vs substr {:.4f} (+{:.4f}), {:.1f}s", acc, f1, substr,
                           f1 - substr, run.seconds);
  }
  return v;
}

Verdict ablations(const fs::path& work) {
  Verdict v;
  auto full = nlohmann::json::parse(read_bytes(work / "full" / "report.json"));
  const double base = full.at("runs").at("model").at("edge").at("f1");
  auto no_pos = run_all(work, "no_positions", [](nlohmann::json& c) { c["model"]["use_positions"] = false; });
  auto no_click = run_all(work, "no_clicks", [](nlohmann::json& c) { c["structural"]["use_click_graph"] = false; });
  v.require(no_pos.ok && no_click.ok, "ablation run failed");
  if (!v.pass) return v;
  const double f_pos = no_pos.report.at("runs").at("model").at("edge").at("f1");
  const double f_click = no_click.report.at("runs").at("model").at("edge").at("f1");
  v.require(f_pos < base, fmt::format("no positions {:.4f} >= full {:.4f}", f_pos, base));
  v.require(f_click < base, fmt::format("no click graph {:.4f} >= full {:.4f}", f_click, base));
  const std::string numbers =
      fmt::format("edge-F1 full {:.4f}, no positions {:.4f}, no click graph {:.4f}", base, f_pos, f_click);
  v.detail = v.pass ? numbers : v.detail + "; " + numbers;
  return v;
}

Verdict determinism(const fs::path& work) {
  Verdict v;
  auto a = run_all(work, "repeat_a", [](nlohmann::json&) {});
  auto b = run_all(work, "repeat_b", [](nlohmann::json&) {});
  v.require(a.ok && b.ok, "pipeline failed");
  if (!v.pass) return v;
  std::size_t compared = 0;
  for (const char* f : {"report.json", "report.txt", "train/model.bin", "train/model.json", "train/history.json",
                        "pretrain/encoder.bin", "pretrain/encoder.json", "pretrain/nodes.bin", "expand/taxonomy.tsv",
                        "expand/additions.jsonl", "make-dataset/train.jsonl"}) {
    const auto x = read_bytes(work / "repeat_a" / f), y = read_bytes(work / "repeat_b" / f);
    v.require(!x.empty() && x == y, std::string(f) + " differs");
    ++compared;
  }
  if (v.pass) v.detail = fmt::format("{} artifacts byte-identical across two runs", compared);
  return v;
}

}  // namespace

int main() {
  const fs::path work = scratch("runs");
  bool gating_ok = true;
  auto report = [&](int id, const std::string& title, const Verdict& v, bool gating = true) {
    std::cout << fmt::format("criterion {}: {} - {}{}: {}", id, v.pass ? "PASS" : "FAIL", title,
                             gating ? "" : " (informative)", v.detail)
              << std::endl;
    if (gating && !v.pass) gating_ok = false;
  };
  auto guarded = [](const std::function<Verdict()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Verdict{false, std::string("exception: ") + e.what()};
    }
  };
  report(1, "formula oracles", guarded(formula_oracles));
  report(2, "gradient integrity", guarded(gradient_integrity));
  report(3, "dataset invariants", guarded([&] { return dataset_invariants(work); }));
  report(4, "metric oracle equivalence", guarded(metric_oracles));
  report(5, "expansion correctness", guarded(expansion_correctness));
  report(6, "end-to-end synthetic experiment", guarded([&] { return end_to_end(work); }));
  report(7, "ablation direction", guarded([&] { return ablations(work); }), false);
  report(8, "determinism", guarded([&] { return determinism(work); }));
  fs::remove_all(work);
  return gating_ok ? 0 : 1;
}
