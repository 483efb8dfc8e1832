#include "spine_eval/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spine_eval/error.hpp"

namespace spine_eval {

const ImageRecord& validate_record(const ImageRecord& record) {
  if (record.width <= 0 || record.height <= 0) {
    throw Error(Errc::kInvalidRecord,
                "image " + record.image_id + " has non-positive dimensions " +
                    std::to_string(record.width) + "x" +
                    std::to_string(record.height));
  }
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < record.boxes.size(); ++i) {
    const BoundingBox& b = record.boxes[i];
    const Box& r = b.rect;
    const auto fail = [&](const std::string& reason) {
      problems.push_back("box " + std::to_string(i) + ": " + reason);
    };
    if (!std::isfinite(r.x_min) || !std::isfinite(r.y_min) ||
        !std::isfinite(r.x_max) || !std::isfinite(r.y_max)) {
      fail("non-finite coordinate");
      continue;
    }
    if (b.label == LesionLabel::kNoFinding) fail("\"No finding\" on a box");
    if (r.x_min < 0.0 || r.y_min < 0.0) fail("negative coordinate");
    if (!(r.x_min < r.x_max)) fail("zero or negative width");
    if (!(r.y_min < r.y_max)) fail("zero or negative height");
    if (r.x_max > record.width || r.y_max > record.height) {
      fail("exceeds image bounds " + std::to_string(record.width) + "x" +
           std::to_string(record.height));
    }
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "image " << record.image_id << ": ";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      if (i) msg << "; ";
      msg << problems[i];
    }
    throw Error(Errc::kInvalidBox, msg.str(), std::nullopt, std::move(problems));
  }
  return record;
}

GroundTruthSet::GroundTruthSet(std::vector<ImageRecord> records)
    : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const ImageRecord& rec = validate_record(records_[i]);
    if (!index_.emplace(rec.image_id, i).second) {
      throw Error(Errc::kDuplicateImageId,
                  "image_id \"" + rec.image_id + "\" appears more than once");
    }
    studies_[rec.study_id].push_back(rec.image_id);
  }
}

const ImageRecord* GroundTruthSet::find(const std::string& image_id) const {
  auto it = index_.find(image_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::size_t GroundTruthSet::abnormal_count() const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(),
      [](const ImageRecord& r) { return r.abnormal(); }));
}

std::size_t GroundTruthSet::normal_count() const {
  return records_.size() - abnormal_count();
}

std::vector<Detection>& DetectorPredictions::at(const std::string& image_id) {
  auto [it, inserted] = index_.emplace(image_id, entries_.size());
  if (inserted) entries_.push_back(Entry{image_id, {}});
  return entries_[it->second].detections;
}

void DetectorPredictions::add(const std::string& image_id,
                              const Detection& detection) {
  at(image_id).push_back(detection);
}

std::span<const Detection> DetectorPredictions::find(
    const std::string& image_id) const {
  auto it = index_.find(image_id);
  if (it == index_.end()) return {};
  return entries_[it->second].detections;
}

bool DetectorPredictions::contains(const std::string& image_id) const {
  return index_.count(image_id) != 0;
}

std::size_t DetectorPredictions::detection_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.detections.size();
  return n;
}

}  // namespace spine_eval
