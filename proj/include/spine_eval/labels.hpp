#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace spine_eval {

// Finding vocabulary in annotation order (LT1..LT13), followed by the
// image-level "No finding" tag that never appears on a box.
enum class LesionLabel : std::uint8_t {
  kAnkylosis,
  kDiscSpaceNarrowing,
  kEnthesophytes,
  kForaminalStenosis,
  kFracture,
  kOsteophytes,
  kScleroticLesion,
  kSpondylolysthesis,
  kSubchondralSclerosis,
  kSurgicalImplant,
  kVertebralCollapse,
  kForeignBody,
  kOtherLesions,
  kNoFinding,
};

inline constexpr std::size_t kNumLesionLabels = 14;
inline constexpr std::size_t kNumAbnormalLabels = 13;

// The seven classes a detector is evaluated on. Values are the matching
// LesionLabel values so conversion is a cast.
enum class DetectionLabel : std::uint8_t {
  kDiscSpaceNarrowing = static_cast<std::uint8_t>(LesionLabel::kDiscSpaceNarrowing),
  kForaminalStenosis = static_cast<std::uint8_t>(LesionLabel::kForaminalStenosis),
  kOsteophytes = static_cast<std::uint8_t>(LesionLabel::kOsteophytes),
  kSpondylolysthesis = static_cast<std::uint8_t>(LesionLabel::kSpondylolysthesis),
  kSurgicalImplant = static_cast<std::uint8_t>(LesionLabel::kSurgicalImplant),
  kVertebralCollapse = static_cast<std::uint8_t>(LesionLabel::kVertebralCollapse),
  kOtherLesions = static_cast<std::uint8_t>(LesionLabel::kOtherLesions),
};

inline constexpr std::size_t kNumDetectionLabels = 7;

// Report column order: LT2, LT4, LT6, LT8, LT10, LT11, LT13.
inline constexpr std::array<DetectionLabel, kNumDetectionLabels> kDetectionLabels = {
    DetectionLabel::kDiscSpaceNarrowing, DetectionLabel::kForaminalStenosis,
    DetectionLabel::kOsteophytes,        DetectionLabel::kSpondylolysthesis,
    DetectionLabel::kSurgicalImplant,    DetectionLabel::kVertebralCollapse,
    DetectionLabel::kOtherLesions,
};

std::array<LesionLabel, kNumLesionLabels> all_lesion_labels();

std::string_view render_label(LesionLabel label);
std::string_view render_label(DetectionLabel label);

// Short code used in report headers, e.g. "LT6" for osteophytes.
std::string_view label_code(LesionLabel label);
std::string_view label_code(DetectionLabel label);

// Trims surrounding whitespace and upper-cases the first character, then
// requires an exact match. Throws Error{kUnknownLabel}.
LesionLabel parse_label(std::string_view raw);

// Like parse_label, but only the seven detection classes are accepted.
DetectionLabel parse_detection_label(std::string_view raw);

// Rare findings collapse into "Other lesions". Throws
// Error{kNoFindingNotMappable} for "No finding".
DetectionLabel remap_to_detection_label(LesionLabel label);

std::optional<DetectionLabel> as_detection_label(LesionLabel label);

constexpr LesionLabel to_lesion_label(DetectionLabel label) {
  return static_cast<LesionLabel>(label);
}

// Position of `label` in kDetectionLabels.
std::size_t detection_index(DetectionLabel label);

}  // namespace spine_eval
