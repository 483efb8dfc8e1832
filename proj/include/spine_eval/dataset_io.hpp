#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spine_eval/types.hpp"

namespace spine_eval {

// --- JSONL readers -------------------------------------------------------
//
// All readers attach the 1-based line number to errors. Blank lines are
// skipped. The stream overloads exist for in-memory use; the path overloads
// throw Error{kIo} when the file cannot be opened.

GroundTruthSet parse_annotations(std::istream& in);
GroundTruthSet parse_annotations(const std::filesystem::path& path);

ClassifierScores parse_classifier_predictions(std::istream& in);
ClassifierScores parse_classifier_predictions(const std::filesystem::path& path);

DetectorPredictions parse_detector_predictions(std::istream& in);
DetectorPredictions parse_detector_predictions(const std::filesystem::path& path);

// --- JSONL writers -------------------------------------------------------

void write_annotations(std::ostream& out, const GroundTruthSet& gt);
void write_classifier_predictions(std::ostream& out, const ClassifierScores& scores);
void write_detector_predictions(std::ostream& out, const DetectorPredictions& preds);

// --- Dataset statistics ----------------------------------------------------

struct SplitStats {
  std::string name;
  std::size_t images = 0;
  std::size_t studies = 0;
  std::size_t normal_images = 0;
  std::size_t abnormal_images = 0;
  std::size_t boxes = 0;
  std::array<std::size_t, kNumAbnormalLabels> boxes_per_label{};  // LT1..LT13
  double mean_width = 0.0;
  double mean_height = 0.0;
  // Demographics over studies that carry the field.
  std::size_t studies_with_age = 0;
  double mean_age = 0.0;
  int min_age = 0;
  int max_age = 0;
  std::size_t studies_with_sex = 0;
  std::size_t male_studies = 0;
  std::size_t female_studies = 0;
};

struct StatsReport {
  std::vector<SplitStats> splits;
  SplitStats total;
};

SplitStats compute_stats(const GroundTruthSet& gt, std::string name = "Total");

// One column per named set plus a pooled total.
StatsReport compute_stats(
    const std::vector<std::pair<std::string, const GroundTruthSet*>>& sets);

// --- Study-level stratified split ------------------------------------------

enum class Split { kTrain, kTest };

struct SplitAssignment {
  std::map<std::string, Split> studies;  // ordered by study_id
  std::uint64_t seed = 0;
  double train_fraction = 1.0;

  std::size_t count(Split which) const;
};

// Maps a study to its stratum key. Studies with equal keys share a stratum.
using StratumFn =
    std::function<std::string(const GroundTruthSet&, const std::vector<std::string>& image_ids)>;

// "abnormal" when any image of the study has a box, else "normal".
std::string abnormality_stratum(const GroundTruthSet& gt,
                                const std::vector<std::string>& image_ids);

// Sorted set of detection classes present in the study, e.g. "LT2+LT6".
std::string lesion_set_stratum(const GroundTruthSet& gt,
                               const std::vector<std::string>& image_ids);

// floor(N * fraction) studies go to train, apportioned across strata by
// largest remainder. Inside each stratum the study ids are sorted and
// Fisher-Yates shuffled with a stream derived from (seed, stratum rank), so
// the result depends only on the study set, the seed and the fraction.
// Throws Error{kInvalidFraction} unless 0 < fraction <= 1, and
// Error{kEmptyDataset} when there is no study.
SplitAssignment stratified_split(const GroundTruthSet& gt, double train_fraction,
                                 std::uint64_t seed,
                                 const StratumFn& stratum = abnormality_stratum);

// "study_id,split" header, then one row per study ordered by study_id.
void write_split_csv(std::ostream& out, const SplitAssignment& split);

std::string_view render_split(Split which);

// Records belonging to studies assigned to `which`, in input order.
GroundTruthSet select_split(const GroundTruthSet& gt, const SplitAssignment& split,
                            Split which);

}  // namespace spine_eval
