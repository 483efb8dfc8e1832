#include "spine_eval/classification.hpp"

#include <algorithm>
#include <numeric>

#include "spine_eval/error.hpp"

namespace spine_eval {
namespace {

void require_both_classes(const LabeledScores& data) {
  const std::size_t pos = data.positives();
  if (pos == 0 || pos == data.size()) {
    throw Error(Errc::kSingleClassOnly, "need both normal and abnormal samples");
  }
}

// Cumulative (tp, fp) after admitting each distinct score, descending.
struct SweepStep {
  double threshold;
  std::size_t tp;
  std::size_t fp;
};

std::vector<SweepStep> sweep(const LabeledScores& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto scores = data.scores();
  const auto labels = data.labels();
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<SweepStep> steps;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (labels[order[i]]) {
      ++tp;
    } else {
      ++fp;
    }
    const bool last_of_tie =
        i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (last_of_tie) steps.push_back({scores[order[i]], tp, fp});
  }
  return steps;
}

}  // namespace

LabeledScores::LabeledScores(std::vector<std::uint8_t> labels,
                             std::vector<double> scores,
                             std::vector<std::string> image_ids)
    : labels_(std::move(labels)),
      scores_(std::move(scores)),
      image_ids_(std::move(image_ids)) {
  if (labels_.size() != scores_.size() ||
      (!image_ids_.empty() && image_ids_.size() != scores_.size())) {
    throw Error(Errc::kInvalidArgument, "labels, scores and ids differ in length");
  }
  for (double s : scores_) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(Errc::kScoreOutOfRange, "score " + std::to_string(s) + " outside [0,1]");
    }
  }
  for (auto& l : labels_) l = l ? 1 : 0;
}

LabeledScores LabeledScores::unchecked(std::vector<std::uint8_t> labels,
                                       std::vector<double> scores) {
  LabeledScores out;
  out.labels_ = std::move(labels);
  out.scores_ = std::move(scores);
  return out;
}

std::size_t LabeledScores::positives() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

LabeledScores join_labels(const GroundTruthSet& gt, const ClassifierScores& scores) {
  std::vector<std::uint8_t> labels;
  std::vector<double> values;
  std::vector<std::string> ids;
  labels.reserve(gt.size());
  values.reserve(gt.size());
  ids.reserve(gt.size());
  for (const ImageRecord& rec : gt.records()) {
    auto it = scores.find(rec.image_id);
    if (it == scores.end()) {
      throw Error(Errc::kMismatchedImageSets,
                  "no prediction for annotated image " + rec.image_id);
    }
    labels.push_back(rec.abnormal() ? 1 : 0);
    values.push_back(it->second);
    ids.push_back(rec.image_id);
  }
  return LabeledScores(std::move(labels), std::move(values), std::move(ids));
}

ClassifierScores ensemble_average(std::span<const ClassifierScores> models) {
  if (models.empty()) throw Error(Errc::kEmptyEnsemble, "no models to average");
  const ClassifierScores& first = models.front();
  for (std::size_t m = 1; m < models.size(); ++m) {
    const ClassifierScores& other = models[m];
    const bool same = other.size() == first.size() &&
                      std::equal(first.begin(), first.end(), other.begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) {
      throw Error(Errc::kMismatchedImageSets,
                  "model " + std::to_string(m) + " covers a different image set");
    }
  }
  ClassifierScores out;
  const double n = static_cast<double>(models.size());
  for (const auto& [id, score] : first) {
    double sum = 0.0;
    for (const ClassifierScores& model : models) sum += model.at(id);
    // Clamp guards the [min,max] bound against summation rounding.
    double lo = score;
    double hi = score;
    for (const ClassifierScores& model : models) {
      lo = std::min(lo, model.at(id));
      hi = std::max(hi, model.at(id));
    }
    out.emplace(id, std::clamp(sum / n, lo, hi));
  }
  return out;
}

RocCurve roc_curve(const LabeledScores& data) {
  require_both_classes(data);
  const double pos = static_cast<double>(data.positives());
  const double neg = static_cast<double>(data.negatives());
  RocCurve curve;
  curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  for (const SweepStep& s : sweep(data)) {
    curve.push_back({static_cast<double>(s.fp) / neg, static_cast<double>(s.tp) / pos,
                     s.threshold});
  }
  return curve;
}

double auroc(const LabeledScores& data) {
  require_both_classes(data);
  // Integrate in counts to keep the sum exact until the final division.
  double area = 0.0;
  std::size_t prev_tp = 0;
  std::size_t prev_fp = 0;
  for (const SweepStep& s : sweep(data)) {
    area += static_cast<double>(s.fp - prev_fp) * static_cast<double>(s.tp + prev_tp);
    prev_tp = s.tp;
    prev_fp = s.fp;
  }
  return area / (2.0 * static_cast<double>(data.positives()) *
                 static_cast<double>(data.negatives()));
}

ThresholdMetrics confusion_at(const LabeledScores& data, double cutoff) {
  require_both_classes(data);
  ThresholdMetrics m;
  m.cutoff = cutoff;
  const auto scores = data.scores();
  const auto labels = data.labels();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool called = scores[i] >= cutoff;
    if (labels[i]) {
      ++(called ? m.counts.tp : m.counts.fn);
    } else {
      ++(called ? m.counts.fp : m.counts.tn);
    }
  }
  const auto& c = m.counts;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  m.sensitivity = d(c.tp) / d(c.tp + c.fn);
  m.specificity = d(c.tn) / d(c.tn + c.fp);
  m.precision = c.tp + c.fp == 0 ? 0.0 : d(c.tp) / d(c.tp + c.fp);
  m.f1 = 2.0 * d(c.tp) / (2.0 * d(c.tp) + d(c.fp) + d(c.fn));
  return m;
}

OperatingPoint youden_optimal(const LabeledScores& data) {
  require_both_classes(data);
  const std::size_t pos = data.positives();
  const std::size_t neg = data.negatives();
  const auto point = [&](double cutoff, std::size_t tp, std::size_t fp) {
    OperatingPoint op;
    op.cutoff = cutoff;
    op.sensitivity = static_cast<double>(tp) / static_cast<double>(pos);
    op.specificity = static_cast<double>(neg - fp) / static_cast<double>(neg);
    op.youden = op.sensitivity + op.specificity - 1.0;
    return op;
  };
  // Start at the +inf sentinel; steps run towards smaller cutoffs, so ">="
  // keeps the smallest cutoff among equal J.
  OperatingPoint best = point(std::numeric_limits<double>::infinity(), 0, 0);
  for (const SweepStep& s : sweep(data)) {
    OperatingPoint op = point(s.threshold, s.tp, s.fp);
    if (op.youden >= best.youden) best = op;
  }
  return best;
}

}  // namespace spine_eval
