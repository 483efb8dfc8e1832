#include "spine_eval/labels.hpp"

#include <cctype>
#include <string>

#include "spine_eval/error.hpp"

namespace spine_eval {
namespace {

constexpr std::array<std::string_view, kNumLesionLabels> kNames = {
    "Ankylosis",
    "Disc space narrowing",
    "Enthesophytes",
    "Foraminal stenosis",
    "Fracture",
    "Osteophytes",
    "Sclerotic lesion",
    "Spondylolysthesis",
    "Subchondral sclerosis",
    "Surgical implant",
    "Vertebral collapse",
    "Foreign body",
    "Other lesions",
    "No finding",
};

constexpr std::array<std::string_view, kNumLesionLabels> kCodes = {
    "LT1", "LT2", "LT3",  "LT4",  "LT5",  "LT6",  "LT7",
    "LT8", "LT9", "LT10", "LT11", "LT12", "LT13", "NF",
};

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::array<LesionLabel, kNumLesionLabels> all_lesion_labels() {
  std::array<LesionLabel, kNumLesionLabels> out{};
  for (std::size_t i = 0; i < kNumLesionLabels; ++i) {
    out[i] = static_cast<LesionLabel>(i);
  }
  return out;
}

std::string_view render_label(LesionLabel label) {
  return kNames[static_cast<std::size_t>(label)];
}

std::string_view render_label(DetectionLabel label) {
  return render_label(to_lesion_label(label));
}

std::string_view label_code(LesionLabel label) {
  return kCodes[static_cast<std::size_t>(label)];
}

std::string_view label_code(DetectionLabel label) {
  return label_code(to_lesion_label(label));
}

LesionLabel parse_label(std::string_view raw) {
  std::string name(trim(raw));
  if (!name.empty()) {
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  }
  for (std::size_t i = 0; i < kNumLesionLabels; ++i) {
    if (kNames[i] == name) return static_cast<LesionLabel>(i);
  }
  throw Error(Errc::kUnknownLabel, "unknown label \"" + std::string(raw) + "\"");
}

DetectionLabel parse_detection_label(std::string_view raw) {
  const LesionLabel label = parse_label(raw);
  if (auto det = as_detection_label(label)) return *det;
  throw Error(Errc::kUnknownLabel,
              "\"" + std::string(raw) + "\" is not a detection class");
}

std::optional<DetectionLabel> as_detection_label(LesionLabel label) {
  for (DetectionLabel d : kDetectionLabels) {
    if (to_lesion_label(d) == label) return d;
  }
  return std::nullopt;
}

DetectionLabel remap_to_detection_label(LesionLabel label) {
  if (label == LesionLabel::kNoFinding) {
    throw Error(Errc::kNoFindingNotMappable,
                "\"No finding\" has no detection class");
  }
  return as_detection_label(label).value_or(DetectionLabel::kOtherLesions);
}

std::size_t detection_index(DetectionLabel label) {
  for (std::size_t i = 0; i < kDetectionLabels.size(); ++i) {
    if (kDetectionLabels[i] == label) return i;
  }
  return kDetectionLabels.size();
}

}  // namespace spine_eval
