#include "taxograft/vocabulary.hpp"

#include "taxograft/error.hpp"
#include "taxograft/text.hpp"

namespace taxograft {

ConceptId ConceptVocabulary::add_normalized(std::string surface) {
  if (auto it = index_.find(surface); it != index_.end()) return it->second;
  const auto id = static_cast<ConceptId>(concepts_.size());
  index_.emplace(surface, id);
  concepts_.push_back(Concept{id, std::move(surface)});
  return id;
}

std::optional<ConceptId> ConceptVocabulary::find(std::string_view raw) const {
  return find_normalized(normalize_text(raw));
}

std::optional<ConceptId> ConceptVocabulary::find_normalized(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& ConceptVocabulary::surface(ConceptId id) const {
  if (!contains(id)) {
    throw Error(ErrorKind::UnknownConcept, "concept id " + std::to_string(id) + " not in vocabulary");
  }
  return concepts_[static_cast<std::size_t>(id)].surface;
}

}  // namespace taxograft
