#include "taxograft/error.hpp"

namespace taxograft {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "Io";
    case ErrorKind::DuplicateConcept: return "DuplicateConcept";
    case ErrorKind::EmptyConcept: return "EmptyConcept";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::NonPositiveCount: return "NonPositiveCount";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::UnknownConcept: return "UnknownConcept";
    case ErrorKind::MissingEmbedding: return "MissingEmbedding";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::IsolatedNode: return "IsolatedNode";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::EmptyPositives: return "EmptyPositives";
    case ErrorKind::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorKind::UniverseMismatch: return "UniverseMismatch";
    case ErrorKind::EmptyGold: return "EmptyGold";
    case ErrorKind::SpecInvalid: return "SpecInvalid";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

std::string at_line(std::string_view what, std::size_t line) {
  return std::string(what) + " (line " + std::to_string(line) + ")";
}

}  // namespace taxograft
