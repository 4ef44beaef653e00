#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taxograft {

using ConceptId = std::int32_t;

struct Concept {
  ConceptId id = 0;
  std::string surface;
};

// Dense id <-> normalized surface mapping. Ids are assigned in insertion order.
class ConceptVocabulary {
 public:
  // Inserts a surface that is already normalized; returns the existing id when
  // the surface is present.
  ConceptId add_normalized(std::string surface);

  std::optional<ConceptId> find(std::string_view raw) const;
  std::optional<ConceptId> find_normalized(std::string_view surface) const;

  const std::string& surface(ConceptId id) const;
  bool contains(ConceptId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < concepts_.size();
  }

  std::size_t size() const noexcept { return concepts_.size(); }
  bool empty() const noexcept { return concepts_.empty(); }
  const std::vector<Concept>& concepts() const noexcept { return concepts_; }

 private:
  std::vector<Concept> concepts_;
  std::unordered_map<std::string, ConceptId> index_;
};

}  // namespace taxograft
