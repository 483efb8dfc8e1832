#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spine_eval {

enum class Errc {
  kUnknownLabel,
  kNoFindingNotMappable,
  kInvalidBox,
  kInvalidRecord,
  kDuplicateImageId,
  kIo,
  kMalformedJson,
  kScoreOutOfRange,
  kConfidenceOutOfRange,
  kEmptyDataset,
  kInvalidFraction,
  kMismatchedImageSets,
  kEmptyEnsemble,
  kSingleClassOnly,
  kDegenerateBox,
  kMixedClasses,
  kMixedImages,
  kNoGroundTruth,
  kAllResamplesDegenerate,
  kEmptyData,
  kInvalidArgument,
  kMissingClassifierScore,
};

std::string_view errc_name(Errc code);

// Single exception type for every domain failure. `line()` is the 1-based
// input line for parse errors; `details()` lists every violation when more
// than one was found.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt,
        std::vector<std::string> details = {});

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
  std::vector<std::string> details_;
};

}  // namespace spine_eval
