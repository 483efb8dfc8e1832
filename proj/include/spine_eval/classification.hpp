#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spine_eval/types.hpp"

namespace spine_eval {

// Binary ground truth (1 = abnormal) paired with a classifier score per image.
class LabeledScores {
 public:
  LabeledScores() = default;

  // Throws Error{kInvalidArgument} on length mismatch and
  // Error{kScoreOutOfRange} for scores outside [0,1]. `image_ids` may be
  // empty; otherwise it must match the other two in length.
  LabeledScores(std::vector<std::uint8_t> labels, std::vector<double> scores,
                std::vector<std::string> image_ids = {});

  std::size_t size() const { return scores_.size(); }
  bool empty() const { return scores_.empty(); }

  std::span<const std::uint8_t> labels() const { return labels_; }
  std::span<const double> scores() const { return scores_; }
  const std::vector<std::string>& image_ids() const { return image_ids_; }

  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }

  // Unchecked construction for hot loops that already hold valid data.
  static LabeledScores unchecked(std::vector<std::uint8_t> labels,
                                 std::vector<double> scores);

 private:
  std::vector<std::uint8_t> labels_;
  std::vector<double> scores_;
  std::vector<std::string> image_ids_;
};

// Joins annotations with scores in annotation order. Every annotated image
// must have a score (Error{kMismatchedImageSets} otherwise); extra scores
// are ignored here and policed by the caller.
LabeledScores join_labels(const GroundTruthSet& gt, const ClassifierScores& scores);

// Per-image unweighted mean. Throws Error{kEmptyEnsemble} for no inputs and
// Error{kMismatchedImageSets} when image id sets differ.
ClassifierScores ensemble_average(std::span<const ClassifierScores> models);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the origin
};

using RocCurve = std::vector<RocPoint>;

// Vertices from (0,0) at threshold +inf through one vertex per distinct
// score (descending) to (1,1). Throws Error{kSingleClassOnly}.
RocCurve roc_curve(const LabeledScores& data);

// Trapezoidal area under roc_curve; ties count 1/2.
double auroc(const LabeledScores& data);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

struct ThresholdMetrics {
  double cutoff = 0.0;
  ConfusionCounts counts;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;  // 0 when nothing is called abnormal
  double f1 = 0.0;
};

// Abnormal iff score >= cutoff. Throws Error{kSingleClassOnly}.
ThresholdMetrics confusion_at(const LabeledScores& data, double cutoff);

// Maximizes J = sensitivity + specificity - 1 over the distinct observed
// scores plus +inf; equal J resolves to the smallest cutoff.
OperatingPoint youden_optimal(const LabeledScores& data);

}  // namespace spine_eval
