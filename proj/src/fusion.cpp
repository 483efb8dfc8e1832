#include "spine_eval/fusion.hpp"

#include <algorithm>

#include "spine_eval/error.hpp"

namespace spine_eval {

void FusionConfig::validate() const {
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "cutoff must be in [0, 1]");
  }
  if (!(floor >= 0.0 && floor <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "confidence floor must be in [0, 1]");
  }
}

std::vector<Detection> gate_detections(double score, std::span<const Detection> detections,
                                       const FusionConfig& config) {
  if (score >= config.cutoff) return {detections.begin(), detections.end()};
  std::vector<Detection> kept;
  std::copy_if(detections.begin(), detections.end(), std::back_inserter(kept),
               [&](const Detection& d) { return d.confidence > config.floor; });
  return kept;
}

double boost_classifier(double score, std::span<const Detection> detections) {
  double top = 0.0;
  for (const Detection& d : detections) top = std::max(top, d.confidence);
  return (score + top) / 2.0;
}

DetectorPredictions fuse_gate(const ClassifierScores& classifier,
                              const DetectorPredictions& detector,
                              const FusionConfig& config) {
  config.validate();
  DetectorPredictions out;
  for (const auto& entry : detector.entries()) {
    auto it = classifier.find(entry.image_id);
    if (it == classifier.end()) {
      throw Error(Errc::kMissingClassifierScore,
                  "no classifier score for detected image " + entry.image_id);
    }
    out.at(entry.image_id) = gate_detections(it->second, entry.detections, config);
  }
  return out;
}

ClassifierScores fuse_boost(const ClassifierScores& classifier,
                            const DetectorPredictions& detector) {
  ClassifierScores out;
  for (const auto& [id, score] : classifier) {
    out.emplace(id, boost_classifier(score, detector.find(id)));
  }
  return out;
}

}  // namespace spine_eval
