#include "spine_eval/detection.hpp"

#include <algorithm>
#include <numeric>

#include "spine_eval/error.hpp"
#include "spine_eval/parallel.hpp"

namespace spine_eval {
namespace {

bool outcome_before(const ScoredOutcome& a, const ScoredOutcome& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.image_rank != b.image_rank) return a.image_rank < b.image_rank;
  return a.index < b.index;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  if (!(a.area() > 0.0) || !(b.area() > 0.0)) {
    throw Error(Errc::kDegenerateBox, "IoU needs boxes with positive area");
  }
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

std::size_t MatchResult::true_positives() const {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(),
                    [](const ScoredOutcome& o) { return o.true_positive; }));
}

MatchResult match_class(std::span<const BoundingBox> ground_truth,
                        std::span<const Detection> predictions, double iou_threshold,
                        std::size_t image_rank) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "IoU threshold must be in (0, 1]");
  }
  std::optional<DetectionLabel> label;
  const auto check = [&](DetectionLabel l) {
    if (label && *label != l) {
      throw Error(Errc::kMixedClasses, "match_class inputs span several classes");
    }
    label = l;
  };
  for (const BoundingBox& g : ground_truth) check(remap_to_detection_label(g.label));
  for (const Detection& p : predictions) check(p.label);

  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });

  MatchResult result;
  result.num_ground_truth = ground_truth.size();
  result.outcomes.reserve(predictions.size());
  std::vector<bool> taken(ground_truth.size(), false);
  for (std::size_t p : order) {
    double best_iou = iou_threshold;
    std::optional<std::size_t> best;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(predictions[p].rect, ground_truth[g].rect);
      if (v > best_iou || (!best && v == best_iou)) {
        best_iou = v;
        best = g;
      }
    }
    if (best) taken[*best] = true;
    result.outcomes.push_back(
        {predictions[p].confidence, best.has_value(), image_rank, p});
  }
  return result;
}

MatchResult pool_matches(std::span<const MatchResult> parts) {
  MatchResult pooled;
  std::size_t total = 0;
  for (const MatchResult& m : parts) total += m.outcomes.size();
  pooled.outcomes.reserve(total);
  for (const MatchResult& m : parts) {
    pooled.num_ground_truth += m.num_ground_truth;
    pooled.outcomes.insert(pooled.outcomes.end(), m.outcomes.begin(), m.outcomes.end());
  }
  std::sort(pooled.outcomes.begin(), pooled.outcomes.end(), outcome_before);
  return pooled;
}

std::vector<PrPoint> pr_curve(const MatchResult& matches) {
  std::vector<PrPoint> curve;
  curve.reserve(matches.outcomes.size());
  const double n_gt = static_cast<double>(matches.num_ground_truth);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < matches.outcomes.size(); ++i) {
    if (matches.outcomes[i].true_positive) ++tp;
    const double t = static_cast<double>(tp);
    curve.push_back({n_gt > 0 ? t / n_gt : 0.0, t / static_cast<double>(i + 1)});
  }
  return curve;
}

double average_precision(const MatchResult& matches) {
  const std::size_t n_gt = matches.num_ground_truth;
  if (n_gt == 0) throw Error(Errc::kNoGroundTruth, "AP undefined without ground truth");
  const auto& outcomes = matches.outcomes;
  const std::size_t n = outcomes.size();

  std::vector<std::size_t> cum_tp(n);
  std::vector<double> envelope(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i].true_positive) ++tp;
    cum_tp[i] = tp;
    envelope[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);

  // Recall level k/100 is reached at the first i with 100*tp_i >= k*n_gt.
  // Integer comparison keeps levels that coincide with a recall exact.
  double sum = 0.0;
  std::size_t i = 0;
  for (std::size_t k = 0; k < kRecallGridPoints; ++k) {
    while (i < n && 100 * cum_tp[i] < k * n_gt) ++i;
    if (i == n) break;
    sum += envelope[i];
  }
  return sum / kRecallGridPoints;
}

MeanApReport mean_ap(const GroundTruthSet& gt, const DetectorPredictions& predictions,
                     double iou_threshold, unsigned threads) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "IoU threshold must be in (0, 1]");
  }
  using PerClass = std::array<MatchResult, kNumDetectionLabels>;

  // Work items: every predicted image, then annotated images with no
  // prediction entry (they only add ground-truth counts).
  struct Item {
    const ImageRecord* record;
    std::span<const Detection> detections;
    std::size_t rank;
  };
  std::vector<Item> items;
  const auto& entries = predictions.entries();
  for (std::size_t r = 0; r < entries.size(); ++r) {
    items.push_back({gt.find(entries[r].image_id), entries[r].detections, r});
  }
  for (const ImageRecord& rec : gt.records()) {
    if (!predictions.contains(rec.image_id)) items.push_back({&rec, {}, entries.size()});
  }

  std::vector<PerClass> per_image(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    const Item& item = items[i];
    std::array<std::vector<BoundingBox>, kNumDetectionLabels> gt_by_class;
    std::array<std::vector<Detection>, kNumDetectionLabels> det_by_class;
    std::array<std::vector<std::size_t>, kNumDetectionLabels> det_index;
    if (item.record) {
      for (const BoundingBox& b : item.record->boxes) {
        gt_by_class[detection_index(remap_to_detection_label(b.label))].push_back(b);
      }
    }
    for (std::size_t d = 0; d < item.detections.size(); ++d) {
      const std::size_t c = detection_index(item.detections[d].label);
      det_by_class[c].push_back(item.detections[d]);
      det_index[c].push_back(d);
    }
    for (std::size_t c = 0; c < kNumDetectionLabels; ++c) {
      MatchResult m = match_class(gt_by_class[c], det_by_class[c], iou_threshold, item.rank);
      // Report the position within the image's full list, not the class slice.
      for (ScoredOutcome& o : m.outcomes) o.index = det_index[c][o.index];
      per_image[i][c] = std::move(m);
    }
  });

  MeanApReport report;
  double sum = 0.0;
  std::size_t counted = 0;
  std::vector<MatchResult> parts(per_image.size());
  for (std::size_t c = 0; c < kNumDetectionLabels; ++c) {
    for (std::size_t i = 0; i < per_image.size(); ++i) parts[i] = std::move(per_image[i][c]);
    const MatchResult pooled = pool_matches(parts);
    report.num_ground_truth[c] = pooled.num_ground_truth;
    report.num_predictions[c] = pooled.outcomes.size();
    if (pooled.num_ground_truth == 0) continue;
    report.ap[c] = average_precision(pooled);
    sum += *report.ap[c];
    ++counted;
  }
  if (counted > 0) report.map = sum / static_cast<double>(counted);
  return report;
}

}  // namespace spine_eval
