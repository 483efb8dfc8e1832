#pragma once

#include <span>
#include <vector>

#include "spine_eval/types.hpp"

namespace spine_eval {

struct FusionConfig {
  double cutoff = 0.5;  // classifier operating point c*
  double floor = 0.5;   // box confidence floor below the cutoff

  // Throws Error{kInvalidArgument} unless both values lie in [0,1].
  void validate() const;
};

// Images the classifier calls abnormal (score >= cutoff) keep every box;
// the rest keep only boxes with confidence strictly above the floor.
std::vector<Detection> gate_detections(double score, std::span<const Detection> detections,
                                       const FusionConfig& config);

// Mean of the classifier score and the highest box confidence (0 if none).
double boost_classifier(double score, std::span<const Detection> detections);

// Applies gate_detections per predicted image, keeping image order. Every
// predicted image needs a classifier score, else
// Error{kMissingClassifierScore}.
DetectorPredictions fuse_gate(const ClassifierScores& classifier,
                              const DetectorPredictions& detector,
                              const FusionConfig& config);

// Applies boost_classifier to every scored image; images without a
// detection entry are treated as having no boxes.
ClassifierScores fuse_boost(const ClassifierScores& classifier,
                            const DetectorPredictions& detector);

}  // namespace spine_eval
