#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taxograft {

enum class ErrorKind {
  Io,
  DuplicateConcept,
  EmptyConcept,
  CycleDetected,
  MalformedLine,
  NonPositiveCount,
  DimensionMismatch,
  MalformedHeader,
  ShapeMismatch,
  NonFiniteLoss,
  UnknownConcept,
  MissingEmbedding,
  EmptyCorpus,
  IsolatedNode,
  UnknownNode,
  EmptyPositives,
  EmptyTrainSet,
  UniverseMismatch,
  EmptyGold,
  SpecInvalid,
  ConfigInvalid,
  MissingArtifact,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure surfaced by the library carries a machine-readable category
// token; what() holds the human-readable prose.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view category() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

// Formats "<what> (line N)" for loader diagnostics.
std::string at_line(std::string_view what, std::size_t line);

}  // namespace taxograft
