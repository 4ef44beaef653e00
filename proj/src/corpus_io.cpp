#include "taxograft/corpus_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "taxograft/error.hpp"
#include "taxograft/text.hpp"

namespace taxograft {
namespace {

// Calls fn(line_number, line) for each non-comment line, with a trailing CR
// stripped.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    fn(number, line);
  }
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  return out;
}

ConceptVocabulary read_vocabulary(std::istream& in) {
  ConceptVocabulary vocab;
  std::unordered_map<std::string, std::size_t> first_line;
  for_each_line(in, [&](std::size_t number, const std::string& line) {
    std::string surface = normalize_text(line);
    if (surface.empty()) throw Error(ErrorKind::EmptyConcept, at_line("empty concept", number));
    if (auto it = first_line.find(surface); it != first_line.end()) {
      throw Error(ErrorKind::DuplicateConcept,
                  at_line("duplicate concept '" + surface + "' first seen on line " +
                              std::to_string(it->second),
                          number));
    }
    first_line.emplace(surface, number);
    vocab.add_normalized(std::move(surface));
  });
  return vocab;
}

ConceptVocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_vocabulary(in);
}

void write_vocabulary(std::ostream& out, const ConceptVocabulary& vocab) {
  for (const auto& c : vocab.concepts()) out << c.surface << '\n';
}

TaxonomyLoad read_taxonomy(std::istream& in, ConceptVocabulary& vocab) {
  TaxonomyLoad result;
  auto resolve = [&](std::string_view raw, std::size_t number) {
    std::string surface = normalize_text(raw);
    if (surface.empty()) throw Error(ErrorKind::MalformedLine, at_line("empty taxonomy surface", number));
    if (auto id = vocab.find_normalized(surface)) return *id;
    result.appended.push_back(surface);
    return vocab.add_normalized(std::move(surface));
  };
  for_each_line(in, [&](std::size_t number, const std::string& line) {
    if (is_blank(line)) return;
    auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorKind::MalformedLine, at_line("expected parent<TAB>child", number));
    }
    ConceptId parent = resolve(fields[0], number);
    ConceptId child = resolve(fields[1], number);
    if (parent == child) {
      throw Error(ErrorKind::CycleDetected,
                  at_line("self-loop " + vocab.surface(parent) + " -> " + vocab.surface(child), number));
    }
    if (!result.taxonomy.add_edge(parent, child)) ++result.duplicate_edges;
  });
  if (auto cycle = result.taxonomy.find_cycle()) {
    std::string witness;
    for (std::size_t k = 0; k < cycle->size(); ++k) {
      if (k > 0) witness += " -> ";
      witness += vocab.surface((*cycle)[k]);
    }
    throw Error(ErrorKind::CycleDetected, "taxonomy cycle: " + witness);
  }
  return result;
}

TaxonomyLoad load_taxonomy(const std::filesystem::path& path, ConceptVocabulary& vocab) {
  auto in = open_input(path);
  return read_taxonomy(in, vocab);
}

void write_taxonomy(std::ostream& out, const Taxonomy& taxonomy, const ConceptVocabulary& vocab) {
  for (const Edge& e : taxonomy.edges()) {
    out << vocab.surface(e.parent) << '\t' << vocab.surface(e.child) << '\n';
  }
}

std::vector<ClickRecord> read_click_log(std::istream& in) {
  std::vector<ClickRecord> records;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for_each_line(in, [&](std::size_t number, const std::string& line) {
    if (is_blank(line)) return;
    auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3) {
      throw Error(ErrorKind::MalformedLine, at_line("expected query<TAB>item[<TAB>count]", number));
    }
    std::string query = normalize_text(fields[0]);
    std::string item = normalize_text(fields[1]);
    if (query.empty() || item.empty()) {
      throw Error(ErrorKind::MalformedLine, at_line("empty query or item", number));
    }
    std::int64_t count = 1;
    if (fields.size() == 3) {
      std::string_view raw = fields[2];
      while (!raw.empty() && raw.front() == ' ') raw.remove_prefix(1);
      while (!raw.empty() && raw.back() == ' ') raw.remove_suffix(1);
      auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), count);
      if (ec != std::errc() || ptr != raw.data() + raw.size()) {
        throw Error(ErrorKind::MalformedLine, at_line("count is not an integer", number));
      }
      if (count <= 0) throw Error(ErrorKind::NonPositiveCount, at_line("click count must be >= 1", number));
    }
    auto key = std::make_pair(query, item);
    if (auto it = slot.find(key); it != slot.end()) {
      records[it->second].count += count;
    } else {
      slot.emplace(std::move(key), records.size());
      records.push_back(ClickRecord{std::move(query), std::move(item), count});
    }
  });
  return records;
}

std::vector<ClickRecord> load_click_log(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_click_log(in);
}

void write_click_log(std::ostream& out, const std::vector<ClickRecord>& records) {
  for (const auto& r : records) out << r.query << '\t' << r.item_text << '\t' << r.count << '\n';
}

ConceptMatcher::ConceptMatcher(const ConceptVocabulary& vocab) {
  for (const auto& c : vocab.concepts()) {
    std::u32string s = to_u32(c.surface);
    max_length_ = std::max(max_length_, s.size());
    auto [it, inserted] = surfaces_.emplace(std::move(s), c.id);
    if (!inserted && c.id < it->second) it->second = c.id;
  }
}

std::optional<ConceptId> ConceptMatcher::match(std::string_view normalized_text) const {
  const std::u32string text = to_u32(normalized_text);
  const std::size_t longest = std::min(max_length_, text.size());
  for (std::size_t len = longest; len >= kMinMatchLength; --len) {
    for (std::size_t start = text.size() - len + 1; start-- > 0;) {
      auto it = surfaces_.find(text.substr(start, len));
      if (it != surfaces_.end()) return it->second;
    }
  }
  return std::nullopt;
}

std::optional<ConceptId> match_concept(std::string_view normalized_text, const ConceptVocabulary& vocab) {
  return ConceptMatcher(vocab).match(normalized_text);
}

EmbeddingTable read_embeddings(std::istream& in, const ConceptVocabulary& vocab) {
  EmbeddingTable table;
  std::string header;
  std::size_t number = 0;
  while (std::getline(in, header)) {
    ++number;
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header.empty() || header.front() == '#') continue;
    break;
  }
  auto head = split_whitespace(header);
  long long rows = -1;
  long long dim = -1;
  if (head.size() == 2) {
    auto r1 = std::from_chars(head[0].data(), head[0].data() + head[0].size(), rows);
    auto r2 = std::from_chars(head[1].data(), head[1].data() + head[1].size(), dim);
    if (r1.ec != std::errc() || r2.ec != std::errc() ||
        r1.ptr != head[0].data() + head[0].size() || r2.ptr != head[1].data() + head[1].size()) {
      rows = dim = -1;
    }
  }
  if (rows < 0 || dim <= 0) throw Error(ErrorKind::MalformedHeader, "embedding header must be `n dim`");
  table.dim = static_cast<Eigen::Index>(dim);

  std::string line;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorKind::MalformedLine, at_line("expected surface<TAB>values", number));
    auto values = split_whitespace(std::string_view(line).substr(tab + 1));
    if (static_cast<long long>(values.size()) != dim) {
      throw Error(ErrorKind::DimensionMismatch,
                  at_line("expected " + std::to_string(dim) + " values, got " + std::to_string(values.size()), number));
    }
    Eigen::RowVectorXd v(table.dim);
    for (Eigen::Index k = 0; k < table.dim; ++k) {
      const std::string& tok = values[static_cast<std::size_t>(k)];
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error(ErrorKind::MalformedLine, at_line("bad float '" + tok + "'", number));
      }
      v[k] = x;
    }
    std::string surface = normalize_text(std::string_view(line).substr(0, tab));
    if (auto id = vocab.find_normalized(surface)) {
      table.vectors[*id] = std::move(v);
    } else {
      table.unmatched.push_back(std::move(surface));
    }
  }
  for (const auto& c : vocab.concepts()) {
    if (table.vectors.count(c.id) == 0) table.missing.push_back(c.id);
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const ConceptVocabulary& vocab) {
  auto in = open_input(path);
  return read_embeddings(in, vocab);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table, const ConceptVocabulary& vocab) {
  out << table.vectors.size() << ' ' << table.dim << '\n';
  for (const auto& [id, v] : table.vectors) {
    out << vocab.surface(id) << '\t';
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (k > 0) out << ' ';
      out << format_double(v[k]);
    }
    out << '\n';
  }
}

}  // namespace taxograft
