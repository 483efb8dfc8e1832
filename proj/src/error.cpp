#include "spine_eval/error.hpp"

namespace spine_eval {
namespace {

std::string compose(Errc code, const std::string& message,
                    std::optional<std::size_t> line) {
  std::string out(errc_name(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kUnknownLabel: return "UnknownLabel";
    case Errc::kNoFindingNotMappable: return "NoFindingNotMappable";
    case Errc::kInvalidBox: return "InvalidBox";
    case Errc::kInvalidRecord: return "InvalidRecord";
    case Errc::kDuplicateImageId: return "DuplicateImageId";
    case Errc::kIo: return "Io";
    case Errc::kMalformedJson: return "MalformedJson";
    case Errc::kScoreOutOfRange: return "ScoreOutOfRange";
    case Errc::kConfidenceOutOfRange: return "ConfidenceOutOfRange";
    case Errc::kEmptyDataset: return "EmptyDataset";
    case Errc::kInvalidFraction: return "InvalidFraction";
    case Errc::kMismatchedImageSets: return "MismatchedImageSets";
    case Errc::kEmptyEnsemble: return "EmptyEnsemble";
    case Errc::kSingleClassOnly: return "SingleClassOnly";
    case Errc::kDegenerateBox: return "DegenerateBox";
    case Errc::kMixedClasses: return "MixedClasses";
    case Errc::kMixedImages: return "MixedImages";
    case Errc::kNoGroundTruth: return "NoGroundTruth";
    case Errc::kAllResamplesDegenerate: return "AllResamplesDegenerate";
    case Errc::kEmptyData: return "EmptyData";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kMissingClassifierScore: return "MissingClassifierScore";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message,
             std::optional<std::size_t> line, std::vector<std::string> details)
    : std::runtime_error(compose(code, message, line)),
      code_(code),
      line_(line),
      details_(std::move(details)) {}

}  // namespace spine_eval
