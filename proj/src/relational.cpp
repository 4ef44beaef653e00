#include "taxograft/relational.hpp"

#include <cmath>

#include "taxograft/error.hpp"
#include "taxograft/rng.hpp"
#include "taxograft/text.hpp"

namespace taxograft {
namespace {

constexpr std::size_t kMaxConceptTokens = 8;

void require_concept(bool ok, ConceptId c) {
  if (!ok) throw Error(ErrorKind::UnknownConcept, "concept id " + std::to_string(c) + " unknown to the encoder");
}

}  // namespace

ReferenceEncoder::ReferenceEncoder(std::size_t n_concepts, std::vector<std::string> words, Eigen::Index dim,
                                   std::uint64_t seed, bool interaction)
    : n_concepts_(n_concepts), words_(std::move(words)), dim_(dim), interaction_(interaction) {
  if (dim_ <= 0) throw Error(ErrorKind::ConfigInvalid, "encoder dimension must be positive");
  for (std::size_t w = 0; w < words_.size(); ++w) {
    word_index_.emplace(words_[w], kNumSpecialTokens + static_cast<int>(n_concepts_ + w));
  }
  const auto n_tokens = static_cast<Eigen::Index>(kNumSpecialTokens + n_concepts_ + words_.size());
  Rng rng = make_rng(seed, "relational.init");
  tokens_ = nn::ParameterXd("relational.tokens", nn::xavier_uniform(n_tokens, dim_, rng));
  slots_ = nn::ParameterXd("relational.slots", nn::xavier_uniform(static_cast<Eigen::Index>(kTemplateLength), dim_, rng));
  proj_w_ = nn::ParameterXd("relational.proj_w", nn::xavier_uniform(interaction_ ? 2 * dim_ : dim_, dim_, rng));
  proj_b_ = nn::ParameterXd("relational.proj_b", nn::MatrixXd::Zero(1, dim_));
}

TemplateInput ReferenceEncoder::build_template(ConceptId query, ConceptId item) const {
  require_concept(knows(query), query);
  require_concept(knows(item), item);
  return TemplateInput{{kCls, concept_token(query), kIs, kA, concept_token(item), kSep}};
}

nn::MatrixXd ReferenceEncoder::encode_pairs(std::span<const Edge> pairs) {
  const auto batch = static_cast<Eigen::Index>(pairs.size());
  cache_.tokens.clear();
  for (const Edge& e : pairs) cache_.tokens.push_back(build_template(e.parent, e.child).tokens);
  cache_.pooled = nn::MatrixXd::Zero(batch, dim_);
  for (std::size_t s = 0; s < kTemplateLength; ++s) {
    nn::MatrixXd& a = cache_.squashed[s];
    a.resize(batch, dim_);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const int tok = cache_.tokens[static_cast<std::size_t>(b)][s];
      a.row(b) = (tokens_.value.row(tok) + slots_.value.row(static_cast<Eigen::Index>(s))).array().tanh().matrix();
    }
    cache_.pooled += a;
  }
  cache_.pooled /= static_cast<double>(kTemplateLength);
  if (interaction_) {
    nn::MatrixXd joined(batch, 2 * dim_);
    joined << cache_.pooled, (cache_.squashed[kQuerySlot].array() * cache_.squashed[kItemSlot].array()).matrix();
    cache_.pooled = std::move(joined);
  }
  cache_.pre = nn::affine(cache_.pooled, proj_w_, proj_b_);
  return nn::relu(cache_.pre);
}

void ReferenceEncoder::backward(const nn::MatrixXd& d_relation) {
  nn::require_shape(d_relation.rows() == cache_.pre.rows() && d_relation.cols() == dim_,
                    "relational backward: gradient shape does not match the cached batch");
  const nn::MatrixXd d_pre = nn::relu_backward(cache_.pre, d_relation);
  const nn::MatrixXd d_input = nn::affine_backward(cache_.pooled, proj_w_, proj_b_, d_pre);
  const nn::MatrixXd d_pooled = d_input.leftCols(dim_) / static_cast<double>(kTemplateLength);
  for (std::size_t s = 0; s < kTemplateLength; ++s) {
    const nn::MatrixXd& a = cache_.squashed[s];
    nn::MatrixXd d_a = d_pooled;
    if (interaction_ && s == kQuerySlot) d_a += (d_input.rightCols(dim_).array() * cache_.squashed[kItemSlot].array()).matrix();
    if (interaction_ && s == kItemSlot) d_a += (d_input.rightCols(dim_).array() * cache_.squashed[kQuerySlot].array()).matrix();
    const nn::MatrixXd dz = (d_a.array() * (1.0 - a.array().square())).matrix();
    slots_.grad.row(static_cast<Eigen::Index>(s)) += dz.colwise().sum();
    for (Eigen::Index b = 0; b < dz.rows(); ++b) {
      tokens_.grad.row(cache_.tokens[static_cast<std::size_t>(b)][s]) += dz.row(b);
    }
  }
}

nn::RowVectorXd ReferenceEncoder::pool(std::span<const int> tokens) const {
  nn::RowVectorXd pooled = nn::RowVectorXd::Zero(dim_);
  std::vector<nn::RowVectorXd> squashed;
  for (std::size_t s = 0; s < tokens.size(); ++s) {
    squashed.push_back(
        (tokens_.value.row(tokens[s]) + slots_.value.row(static_cast<Eigen::Index>(s))).array().tanh().matrix());
    pooled += squashed.back();
  }
  pooled /= static_cast<double>(tokens.size());
  if (interaction_) {
    nn::RowVectorXd joined = nn::RowVectorXd::Zero(2 * dim_);
    joined.head(dim_) = pooled;
    if (tokens.size() == kTemplateLength) {
      joined.tail(dim_) = (squashed[kQuerySlot].array() * squashed[kItemSlot].array()).matrix();
    }
    pooled = joined;
  }
  nn::RowVectorXd pre = pooled * proj_w_.value + proj_b_.value;
  return pre.cwiseMax(0.0);
}

nn::RowVectorXd ReferenceEncoder::encode_pair(ConceptId query, ConceptId item) const {
  const TemplateInput t = build_template(query, item);
  return pool(t.tokens);
}

nn::RowVectorXd ReferenceEncoder::encode_concept(ConceptId c) const {
  require_concept(knows(c), c);
  const std::array<int, 3> tokens{kCls, concept_token(c), kSep};
  return pool(tokens);
}

std::vector<nn::ParameterXd*> ReferenceEncoder::trainable_parameters(bool include_tables) {
  std::vector<nn::ParameterXd*> out{&slots_, &proj_w_, &proj_b_};
  if (include_tables) out.insert(out.begin(), &tokens_);
  return out;
}

std::vector<nn::ParameterXd*> ReferenceEncoder::parameters() { return {&tokens_, &slots_, &proj_w_, &proj_b_}; }

nlohmann::json ReferenceEncoder::describe() const {
  return nlohmann::json{{"provider", "reference"},
                        {"dim", dim_},
                        {"n_concepts", n_concepts_},
                        {"interaction", interaction_},
                        {"words", words_}};
}

TokenizedSentence ReferenceEncoder::tokenize(std::string_view line, const ConceptVocabulary& vocab) const {
  const std::vector<std::string> raw = split_whitespace(normalize_text(line));
  TokenizedSentence out;
  std::size_t k = 0;
  while (k < raw.size()) {
    bool matched = false;
    for (std::size_t span = std::min(kMaxConceptTokens, raw.size() - k); span >= 1; --span) {
      std::string joined = raw[k];
      for (std::size_t j = 1; j < span; ++j) joined += ' ' + raw[k + j];
      if (auto id = vocab.find_normalized(joined); id && knows(*id)) {
        out.concept_slots.push_back(out.tokens.size());
        out.tokens.push_back(concept_token(*id));
        k += span;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (auto it = word_index_.find(raw[k]); it != word_index_.end()) out.tokens.push_back(it->second);
    ++k;
  }
  return out;
}

std::vector<std::string> corpus_words(std::span<const std::string> lines, const ConceptVocabulary& vocab) {
  std::vector<std::string> words;
  std::unordered_map<std::string, bool> seen;
  for (const std::string& line : lines) {
    const std::vector<std::string> raw = split_whitespace(normalize_text(line));
    std::size_t k = 0;
    while (k < raw.size()) {
      std::size_t consumed = 0;
      for (std::size_t span = std::min(kMaxConceptTokens, raw.size() - k); span >= 1; --span) {
        std::string joined = raw[k];
        for (std::size_t j = 1; j < span; ++j) joined += ' ' + raw[k + j];
        if (vocab.find_normalized(joined)) {
          consumed = span;
          break;
        }
      }
      if (consumed > 0) {
        k += consumed;
        continue;
      }
      if (seen.emplace(raw[k], true).second) words.push_back(raw[k]);
      ++k;
    }
  }
  return words;
}

std::vector<double> pretrain_concept_masking(ReferenceEncoder& encoder, std::span<const TokenizedSentence> corpus,
                                             const MaskingOptions& options) {
  std::size_t usable = 0;
  for (const auto& s : corpus) usable += s.concept_slots.empty() ? 0 : 1;
  if (usable == 0) throw Error(ErrorKind::EmptyCorpus, "no corpus sentence mentions a vocabulary concept");

  nn::MatrixXd& table = encoder.token_embeddings().value;
  const auto n_concepts = static_cast<Eigen::Index>(encoder.n_concepts());
  const Eigen::Index first = encoder.concept_token(0);
  std::vector<double> history;
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng = make_rng(mix_seed(options.seed, static_cast<std::uint64_t>(epoch)), "relational.masking");
    shuffle_in_place(order, rng);
    double total = 0.0;
    std::size_t targets = 0;
    for (std::size_t idx : order) {
      const TokenizedSentence& s = corpus[idx];
      if (s.concept_slots.empty()) continue;
      std::vector<bool> masked(s.tokens.size(), false);
      std::vector<int> target_tokens;
      for (std::size_t slot : s.concept_slots) {
        if (uniform01(rng) < options.mask_prob) {
          masked[slot] = true;
          target_tokens.push_back(s.tokens[slot]);
        }
      }
      if (target_tokens.empty()) continue;
      std::vector<int> context;
      for (std::size_t k = 0; k < s.tokens.size(); ++k) {
        if (!masked[k]) context.push_back(s.tokens[k]);
      }
      if (context.empty()) continue;

      nn::RowVectorXd ctx = nn::RowVectorXd::Zero(table.cols());
      for (int t : context) ctx += table.row(t);
      ctx /= static_cast<double>(context.size());

      const auto concepts = table.middleRows(first, n_concepts);
      nn::RowVectorXd logits = ctx * concepts.transpose();
      const double m = logits.maxCoeff();
      nn::RowVectorXd p = (logits.array() - m).exp().matrix();
      const double z = p.sum();
      p /= z;

      // d loss / d logits summed over all masked targets of this sentence.
      nn::RowVectorXd d_logits = static_cast<double>(target_tokens.size()) * p;
      for (int t : target_tokens) {
        const Eigen::Index c = t - first;
        total -= std::log(std::max(p[c], 1e-300));
        d_logits[c] -= 1.0;
      }
      targets += target_tokens.size();

      const nn::RowVectorXd d_ctx = d_logits * concepts;
      const nn::MatrixXd d_concepts = d_logits.transpose() * ctx;
      table.middleRows(first, n_concepts) -= options.learning_rate * d_concepts;
      const nn::RowVectorXd step = options.learning_rate * d_ctx / static_cast<double>(context.size());
      for (int t : context) table.row(t) -= step;
    }
    history.push_back(targets == 0 ? 0.0 : total / static_cast<double>(targets));
  }
  return history;
}

PrecomputedEncoder::PrecomputedEncoder(const EmbeddingTable& table, std::size_t n_concepts, Eigen::Index dim,
                                       std::uint64_t seed)
    : dim_(dim), present_(n_concepts, false) {
  if (dim_ <= 0 || table.dim <= 0) throw Error(ErrorKind::ConfigInvalid, "encoder dimension must be positive");
  nn::MatrixXd vectors = nn::MatrixXd::Zero(static_cast<Eigen::Index>(n_concepts), table.dim);
  for (const auto& [id, v] : table.vectors) {
    if (id < 0 || static_cast<std::size_t>(id) >= n_concepts) continue;
    vectors.row(id) = v;
    present_[static_cast<std::size_t>(id)] = true;
  }
  vectors_ = nn::ParameterXd("precomputed.vectors", std::move(vectors));
  Rng rng = make_rng(seed, "precomputed.init");
  proj_w_ = nn::ParameterXd("precomputed.proj_w", nn::xavier_uniform(2 * table.dim, dim_, rng));
  proj_b_ = nn::ParameterXd("precomputed.proj_b", nn::MatrixXd::Zero(1, dim_));
}

bool PrecomputedEncoder::knows(ConceptId c) const {
  return c >= 0 && static_cast<std::size_t>(c) < present_.size() && present_[static_cast<std::size_t>(c)];
}

const nn::RowVectorXd& PrecomputedEncoder::vector_of(ConceptId c) const {
  if (!knows(c)) throw Error(ErrorKind::MissingEmbedding, "no precomputed vector for concept id " + std::to_string(c));
  row_ = vectors_.value.row(c);
  return row_;
}

nn::MatrixXd PrecomputedEncoder::encode_pairs(std::span<const Edge> pairs) {
  const Eigen::Index d = vectors_.value.cols();
  cache_input_.resize(static_cast<Eigen::Index>(pairs.size()), 2 * d);
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    const auto row = static_cast<Eigen::Index>(b);
    cache_input_.row(row).head(d) = vector_of(pairs[b].parent);
    cache_input_.row(row).tail(d) = vector_of(pairs[b].child);
  }
  return nn::affine(cache_input_, proj_w_, proj_b_);
}

void PrecomputedEncoder::backward(const nn::MatrixXd& d_relation) {
  nn::affine_backward(cache_input_, proj_w_, proj_b_, d_relation);
}

nn::RowVectorXd PrecomputedEncoder::encode_pair(ConceptId query, ConceptId item) const {
  const Eigen::Index d = vectors_.value.cols();
  nn::RowVectorXd x(2 * d);
  x.head(d) = vector_of(query);
  x.tail(d) = vector_of(item);
  return x * proj_w_.value + proj_b_.value;
}

nn::RowVectorXd PrecomputedEncoder::encode_concept(ConceptId c) const { return vector_of(c); }

std::vector<nn::ParameterXd*> PrecomputedEncoder::trainable_parameters(bool /*include_tables*/) {
  return {&proj_w_, &proj_b_};
}

std::vector<nn::ParameterXd*> PrecomputedEncoder::parameters() { return {&vectors_, &proj_w_, &proj_b_}; }

nlohmann::json PrecomputedEncoder::describe() const {
  std::vector<ConceptId> present;
  for (std::size_t c = 0; c < present_.size(); ++c) {
    if (present_[c]) present.push_back(static_cast<ConceptId>(c));
  }
  return nlohmann::json{{"provider", "precomputed"},
                        {"dim", dim_},
                        {"concept_dim", vectors_.value.cols()},
                        {"n_concepts", present_.size()},
                        {"present", present}};
}

std::unique_ptr<RelationEncoder> provider_select(const ProviderOptions& options, const ConceptVocabulary& vocab,
                                                 std::span<const std::string> corpus_lines) {
  if (options.provider == "reference") {
    return std::make_unique<ReferenceEncoder>(vocab.size(), corpus_words(corpus_lines, vocab), options.dim,
                                              options.seed, options.interaction);
  }
  constexpr std::string_view kPrefix = "precomputed:";
  if (options.provider.rfind(kPrefix, 0) == 0) {
    const std::string path = options.provider.substr(kPrefix.size());
    const EmbeddingTable table = load_embeddings(path, vocab);
    return std::make_unique<PrecomputedEncoder>(table, vocab.size(), options.dim, options.seed);
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown encoder provider '" + options.provider + "'");
}

std::unique_ptr<RelationEncoder> encoder_from_description(const nlohmann::json& description) {
  const std::string provider = description.at("provider").get<std::string>();
  const auto dim = description.at("dim").get<Eigen::Index>();
  const auto n_concepts = description.at("n_concepts").get<std::size_t>();
  if (provider == "reference") {
    return std::make_unique<ReferenceEncoder>(n_concepts, description.at("words").get<std::vector<std::string>>(),
                                              dim, 0, description.value("interaction", false));
  }
  if (provider == "precomputed") {
    EmbeddingTable table;
    table.dim = description.at("concept_dim").get<Eigen::Index>();
    for (ConceptId c : description.at("present").get<std::vector<ConceptId>>()) {
      table.vectors[c] = nn::RowVectorXd::Zero(table.dim);
    }
    return std::make_unique<PrecomputedEncoder>(table, n_concepts, dim, 0);
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown encoder provider '" + provider + "'");
}

}  // namespace taxograft
