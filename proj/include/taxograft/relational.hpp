#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "taxograft/corpus_io.hpp"
#include "taxograft/nn.hpp"
#include "taxograft/taxonomy.hpp"

namespace taxograft {

enum SpecialToken : int { kCls = 0, kSep = 1, kIs = 2, kA = 3, kMask = 4, kNumSpecialTokens = 5 };

inline constexpr std::size_t kTemplateLength = 6;
inline constexpr std::size_t kQuerySlot = 1;
inline constexpr std::size_t kItemSlot = 4;

// [CLS] q IS A i [SEP], with each concept a single token.
struct TemplateInput {
  std::array<int, kTemplateLength> tokens{};

  bool operator==(const TemplateInput&) const = default;
};

// Pair encoder: maps an ordered concept pair to a fixed-size relation vector,
// and a single concept to a node vector. Forward caches what backward needs;
// backward must follow the matching encode_pairs call.
class RelationEncoder {
 public:
  virtual ~RelationEncoder() = default;

  virtual std::string provider() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual Eigen::Index concept_dim() const = 0;
  virtual bool knows(ConceptId c) const = 0;

  virtual nn::MatrixXd encode_pairs(std::span<const Edge> pairs) = 0;
  virtual void backward(const nn::MatrixXd& d_relation) = 0;

  virtual nn::RowVectorXd encode_pair(ConceptId query, ConceptId item) const = 0;
  virtual nn::RowVectorXd encode_concept(ConceptId c) const = 0;

  // Parameters updated during classifier fine-tuning; embedding tables only
  // when `include_tables`.
  virtual std::vector<nn::ParameterXd*> trainable_parameters(bool include_tables) = 0;
  virtual std::vector<nn::ParameterXd*> parameters() = 0;

  // Everything needed to rebuild an encoder of the same shape.
  virtual nlohmann::json describe() const = 0;
};

struct TokenizedSentence {
  std::vector<int> tokens;
  std::vector<std::size_t> concept_slots;  // positions in `tokens` holding concepts
};

// Stand-in for a pretrained language model: token embeddings plus one
// embedding per template slot, squashed per slot, mean-pooled, and projected
// with affine + relu. With `interaction` the projection also sees the
// elementwise product of the two concept slots.
class ReferenceEncoder final : public RelationEncoder {
 public:
  ReferenceEncoder(std::size_t n_concepts, std::vector<std::string> words, Eigen::Index dim, std::uint64_t seed,
                   bool interaction = true);

  std::string provider() const override { return "reference"; }
  Eigen::Index dim() const override { return dim_; }
  Eigen::Index concept_dim() const override { return dim_; }
  bool knows(ConceptId c) const override { return c >= 0 && static_cast<std::size_t>(c) < n_concepts_; }

  TemplateInput build_template(ConceptId query, ConceptId item) const;

  nn::MatrixXd encode_pairs(std::span<const Edge> pairs) override;
  void backward(const nn::MatrixXd& d_relation) override;
  nn::RowVectorXd encode_pair(ConceptId query, ConceptId item) const override;
  nn::RowVectorXd encode_concept(ConceptId c) const override;

  std::vector<nn::ParameterXd*> trainable_parameters(bool include_tables) override;
  std::vector<nn::ParameterXd*> parameters() override;
  nlohmann::json describe() const override;

  // Whitespace tokens; token n-grams equal to a vocabulary surface become one
  // concept token (longest span first). Unknown words map to their own tokens
  // when known to the encoder and are dropped otherwise.
  TokenizedSentence tokenize(std::string_view line, const ConceptVocabulary& vocab) const;

  int concept_token(ConceptId c) const { return kNumSpecialTokens + c; }
  bool is_concept_token(int t) const {
    return t >= kNumSpecialTokens && t < kNumSpecialTokens + static_cast<int>(n_concepts_);
  }
  std::size_t n_concepts() const noexcept { return n_concepts_; }
  bool interaction() const noexcept { return interaction_; }
  const std::vector<std::string>& words() const noexcept { return words_; }

  nn::ParameterXd& token_embeddings() { return tokens_; }
  nn::ParameterXd& slot_embeddings() { return slots_; }
  const nn::ParameterXd& token_embeddings() const { return tokens_; }
  const nn::ParameterXd& slot_embeddings() const { return slots_; }

 private:
  nn::RowVectorXd pool(std::span<const int> tokens) const;

  std::size_t n_concepts_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> word_index_;
  Eigen::Index dim_;
  bool interaction_;
  nn::ParameterXd tokens_;
  nn::ParameterXd slots_;
  nn::ParameterXd proj_w_;
  nn::ParameterXd proj_b_;

  struct Cache {
    std::vector<std::array<int, kTemplateLength>> tokens;
    std::array<nn::MatrixXd, kTemplateLength> squashed;  // tanh(token + slot) per slot
    nn::MatrixXd pooled;  // projection input
    nn::MatrixXd pre;
  } cache_;
};

// Collects the distinct non-concept words of a corpus, in first-seen order.
std::vector<std::string> corpus_words(std::span<const std::string> lines, const ConceptVocabulary& vocab);

struct MaskingOptions {
  int epochs = 5;
  double learning_rate = 0.1;
  double mask_prob = 0.15;
  std::uint64_t seed = 0;
};

// CBOW-style concept masking: each concept occurrence is masked with
// probability mask_prob and predicted by a softmax over concepts (tied to the
// token table) from the mean of the unmasked tokens. Returns mean loss per
// masked target for each epoch.
std::vector<double> pretrain_concept_masking(ReferenceEncoder& encoder, std::span<const TokenizedSentence> corpus,
                                             const MaskingOptions& options);

// Serves per-concept vectors read from a file; pair vectors are an affine
// projection of [v_q, v_i].
class PrecomputedEncoder final : public RelationEncoder {
 public:
  PrecomputedEncoder(const EmbeddingTable& table, std::size_t n_concepts, Eigen::Index dim, std::uint64_t seed);

  std::string provider() const override { return "precomputed"; }
  Eigen::Index dim() const override { return dim_; }
  Eigen::Index concept_dim() const override { return vectors_.value.cols(); }
  bool knows(ConceptId c) const override;

  nn::MatrixXd encode_pairs(std::span<const Edge> pairs) override;
  void backward(const nn::MatrixXd& d_relation) override;
  nn::RowVectorXd encode_pair(ConceptId query, ConceptId item) const override;
  nn::RowVectorXd encode_concept(ConceptId c) const override;

  std::vector<nn::ParameterXd*> trainable_parameters(bool include_tables) override;
  std::vector<nn::ParameterXd*> parameters() override;
  nlohmann::json describe() const override;

 private:
  const nn::RowVectorXd& vector_of(ConceptId c) const;

  Eigen::Index dim_;
  std::vector<bool> present_;
  nn::ParameterXd vectors_;
  nn::ParameterXd proj_w_;
  nn::ParameterXd proj_b_;
  nn::MatrixXd cache_input_;
  mutable nn::RowVectorXd row_;
};

struct ProviderOptions {
  std::string provider = "reference";  // "reference" or "precomputed:<path>"
  Eigen::Index dim = 64;
  bool interaction = true;  // reference provider only
  std::uint64_t seed = 0;
};

std::unique_ptr<RelationEncoder> provider_select(const ProviderOptions& options, const ConceptVocabulary& vocab,
                                                 std::span<const std::string> corpus_lines);

// Rebuilds an encoder from describe() output; parameters are then loaded from
// a checkpoint.
std::unique_ptr<RelationEncoder> encoder_from_description(const nlohmann::json& description);

}  // namespace taxograft
