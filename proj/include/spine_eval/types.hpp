#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spine_eval/labels.hpp"

namespace spine_eval {

// Half-open pixel rectangle [x_min, x_max) x [y_min, y_max).
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  friend bool operator==(const Box&, const Box&) = default;
};

struct BoundingBox {
  Box rect;
  LesionLabel label = LesionLabel::kOtherLesions;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class Sex : char { kMale = 'M', kFemale = 'F' };

struct ImageRecord {
  std::string image_id;
  std::string study_id;
  int width = 0;
  int height = 0;
  std::vector<BoundingBox> boxes;
  std::optional<int> age;
  std::optional<Sex> sex;

  bool abnormal() const { return !boxes.empty(); }

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Returns the record unchanged when every box has positive area, finite
// non-negative coordinates inside [0,width] x [0,height] and a finding label.
// Otherwise throws Error{kInvalidBox} listing every violation in details();
// non-positive dimensions throw Error{kInvalidRecord}.
const ImageRecord& validate_record(const ImageRecord& record);

// Collected, validated annotations. Records keep their input order.
class GroundTruthSet {
 public:
  GroundTruthSet() = default;

  // Validates each record and rejects repeated image ids with
  // Error{kDuplicateImageId}.
  explicit GroundTruthSet(std::vector<ImageRecord> records);

  const std::vector<ImageRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const ImageRecord* find(const std::string& image_id) const;

  // study_id -> image ids in input order; ordered by study_id.
  const std::map<std::string, std::vector<std::string>>& studies() const {
    return studies_;
  }

  std::size_t normal_count() const;
  std::size_t abnormal_count() const;

  friend bool operator==(const GroundTruthSet& a, const GroundTruthSet& b) {
    return a.records_ == b.records_;
  }

 private:
  std::vector<ImageRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<std::string>> studies_;
};

// image_id -> p(abnormal | image).
using ClassifierScores = std::map<std::string, double>;

struct Detection {
  Box rect;
  DetectionLabel label = DetectionLabel::kOtherLesions;
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Detections grouped per image, keeping the order in which images were
// first seen; that order is the tie-break for equal confidences.
class DetectorPredictions {
 public:
  struct Entry {
    std::string image_id;
    std::vector<Detection> detections;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  // Registers the image (possibly with no detections) and returns its list.
  std::vector<Detection>& at(const std::string& image_id);
  void add(const std::string& image_id, const Detection& detection);

  // Empty span for images that were never added.
  std::span<const Detection> find(const std::string& image_id) const;
  bool contains(const std::string& image_id) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t image_count() const { return entries_.size(); }
  std::size_t detection_count() const;

  friend bool operator==(const DetectorPredictions& a,
                         const DetectorPredictions& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct OperatingPoint {
  double cutoff = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double youden = 0.0;
};

}  // namespace spine_eval
