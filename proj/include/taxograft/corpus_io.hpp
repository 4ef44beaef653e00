#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "taxograft/taxonomy.hpp"
#include "taxograft/vocabulary.hpp"

namespace taxograft {

struct ClickRecord {
  std::string query;
  std::string item_text;
  std::int64_t count = 1;

  bool operator==(const ClickRecord&) const = default;
};

// Input files are UTF-8 with LF endings. Lines starting with '#' are comments.
ConceptVocabulary read_vocabulary(std::istream& in);
ConceptVocabulary load_vocabulary(const std::filesystem::path& path);
void write_vocabulary(std::ostream& out, const ConceptVocabulary& vocab);

struct TaxonomyLoad {
  Taxonomy taxonomy;
  std::vector<std::string> appended;  // surfaces added to the vocabulary
  std::size_t duplicate_edges = 0;
};

// TSV `parent<TAB>child`. Unknown surfaces are appended to `vocab`.
TaxonomyLoad read_taxonomy(std::istream& in, ConceptVocabulary& vocab);
TaxonomyLoad load_taxonomy(const std::filesystem::path& path, ConceptVocabulary& vocab);
void write_taxonomy(std::ostream& out, const Taxonomy& taxonomy, const ConceptVocabulary& vocab);

// TSV `query<TAB>item_text[<TAB>count]`; identical (query, item_text) pairs are
// merged by summing counts, keeping first-appearance order.
std::vector<ClickRecord> read_click_log(std::istream& in);
std::vector<ClickRecord> load_click_log(const std::filesystem::path& path);
void write_click_log(std::ostream& out, const std::vector<ClickRecord>& records);

// Longest vocabulary surface occurring contiguously in a normalized text.
class ConceptMatcher {
 public:
  static constexpr std::size_t kMinMatchLength = 2;

  explicit ConceptMatcher(const ConceptVocabulary& vocab);

  // Longest match of at least kMinMatchLength code points; ties go to the
  // rightmost start offset, then to the smallest concept id.
  std::optional<ConceptId> match(std::string_view normalized_text) const;

 private:
  std::unordered_map<std::u32string, ConceptId> surfaces_;
  std::size_t max_length_ = 0;
};

std::optional<ConceptId> match_concept(std::string_view normalized_text, const ConceptVocabulary& vocab);

struct EmbeddingTable {
  Eigen::Index dim = 0;
  std::map<ConceptId, Eigen::RowVectorXd> vectors;
  std::vector<std::string> unmatched;   // file surfaces absent from the vocabulary
  std::vector<ConceptId> missing;       // vocabulary concepts absent from the file
};

// Header `n dim`, then `surface<TAB>f1 ... f_dim` (space separated floats).
EmbeddingTable read_embeddings(std::istream& in, const ConceptVocabulary& vocab);
EmbeddingTable load_embeddings(const std::filesystem::path& path, const ConceptVocabulary& vocab);
void write_embeddings(std::ostream& out, const EmbeddingTable& table, const ConceptVocabulary& vocab);

// Opens a file for reading or writing, mapping failures to ErrorKind::Io.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace taxograft
