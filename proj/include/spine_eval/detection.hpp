#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "spine_eval/types.hpp"

namespace spine_eval {

// Intersection over union of two half-open rectangles. Throws
// Error{kDegenerateBox} unless both have positive area.
double iou(const Box& a, const Box& b);

struct ScoredOutcome {
  double confidence = 0.0;
  bool true_positive = false;
  std::size_t image_rank = 0;  // position of the image in the prediction set
  std::size_t index = 0;       // position of the detection within its image
};

// Outcomes ordered by confidence descending, then (image_rank, index).
struct MatchResult {
  std::vector<ScoredOutcome> outcomes;
  std::size_t num_ground_truth = 0;

  std::size_t true_positives() const;
};

// Greedy one-to-one matching for one image and one class. Predictions are
// visited by descending confidence (input order on ties); each takes the
// unmatched ground-truth box with the highest IoU if that IoU reaches the
// threshold, and is a false positive otherwise. Ground-truth labels are
// compared after remap_to_detection_label. Throws Error{kMixedClasses} when
// the inputs span more than one class, Error{kInvalidArgument} unless
// 0 < iou_threshold <= 1.
MatchResult match_class(std::span<const BoundingBox> ground_truth,
                        std::span<const Detection> predictions,
                        double iou_threshold = 0.5, std::size_t image_rank = 0);

// Concatenates per-image results and restores the global ordering.
MatchResult pool_matches(std::span<const MatchResult> parts);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

std::vector<PrPoint> pr_curve(const MatchResult& matches);

inline constexpr int kRecallGridPoints = 101;

// Mean over recall levels 0.00, 0.01, ..., 1.00 of the best precision
// reached at any recall >= that level (0 where unreachable). Throws
// Error{kNoGroundTruth} when the class has no ground-truth boxes.
double average_precision(const MatchResult& matches);

struct MeanApReport {
  // Indexed like kDetectionLabels; empty where the class has no ground truth.
  std::array<std::optional<double>, kNumDetectionLabels> ap{};
  std::array<std::size_t, kNumDetectionLabels> num_ground_truth{};
  std::array<std::size_t, kNumDetectionLabels> num_predictions{};
  // Unweighted mean over classes with ground truth; empty if there are none.
  std::optional<double> map;
};

// Ground-truth boxes are remapped to detection classes, matching runs per
// image and class, and outcomes are pooled per class over the whole set.
// Predicted images absent from `gt` contribute false positives only.
MeanApReport mean_ap(const GroundTruthSet& gt, const DetectorPredictions& predictions,
                     double iou_threshold = 0.5, unsigned threads = 1);

}  // namespace spine_eval
