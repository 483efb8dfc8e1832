#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "spine_eval/dataset_io.hpp"
#include "spine_eval/error.hpp"
#include "synthetic.hpp"

using namespace spine_eval;

namespace {

template <typename Fn>
Error catch_error(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected spine_eval::Error";
  return Error(Errc::kInvalidArgument, "none");
}

GroundTruthSet parse_gt(const std::string& text) {
  std::istringstream in(text);
  return parse_annotations(in);
}

GroundTruthSet random_gt(std::mt19937_64& rng, std::size_t n_studies) {
  std::vector<ImageRecord> records;
  std::uniform_int_distribution<int> images_per_study(1, 3);
  std::uniform_int_distribution<int> boxes(0, 3);
  std::uniform_int_distribution<int> label(0, 12);
  std::uniform_real_distribution<double> coord(0.0, 400.0);
  std::bernoulli_distribution half(0.5);
  for (std::size_t s = 0; s < n_studies; ++s) {
    const int k = images_per_study(rng);
    for (int i = 0; i < k; ++i) {
      ImageRecord r = synth::image("img" + std::to_string(s) + "_" + std::to_string(i),
                                   "study" + std::to_string(s), {}, 1000, 1000);
      if (half(rng)) {
        for (int b = boxes(rng); b >= 0; --b) {
          const double x = coord(rng);
          const double y = coord(rng);
          r.boxes.push_back(synth::lesion(static_cast<LesionLabel>(label(rng)), x, y,
                                          x + 1.0 + coord(rng), y + 0.5 + coord(rng)));
        }
      }
      if (half(rng)) r.age = 20 + static_cast<int>(s % 60);
      if (half(rng)) r.sex = half(rng) ? Sex::kMale : Sex::kFemale;
      records.push_back(std::move(r));
    }
  }
  return GroundTruthSet(std::move(records));
}

}  // namespace

TEST(ParseAnnotations, TwoValidLines) {
  const GroundTruthSet gt = parse_gt(
      R"({"image_id":"a","study_id":"s1","width":100,"height":80,"boxes":[{"label":"Osteophytes","x_min":1,"y_min":2,"x_max":30,"y_max":40}]})"
      "\n"
      R"({"image_id":"b","study_id":"s1","width":100,"height":80,"boxes":[],"age":51,"sex":"F"})"
      "\n");
  ASSERT_EQ(gt.size(), 2u);
  EXPECT_TRUE(gt.records()[0].abnormal());
  EXPECT_FALSE(gt.records()[1].abnormal());
  EXPECT_EQ(gt.records()[1].age, 51);
  EXPECT_EQ(gt.records()[1].sex, Sex::kFemale);
  EXPECT_EQ(gt.records()[0].boxes[0].rect, (Box{1, 2, 30, 40}));
}

TEST(ParseAnnotations, InvalidBoxCarriesLine) {
  const Error e = catch_error([] {
    parse_gt(
        R"({"image_id":"a","study_id":"s","width":100,"height":100,"boxes":[]})"
        "\n"
        R"({"image_id":"b","study_id":"s","width":100,"height":100,"boxes":[{"label":"Fracture","x_min":20,"y_min":0,"x_max":10,"y_max":5}]})"
        "\n");
  });
  EXPECT_EQ(e.code(), Errc::kInvalidBox);
  EXPECT_EQ(e.line(), 2u);
}

TEST(ParseAnnotations, MalformedAndDuplicate) {
  EXPECT_EQ(catch_error([] { parse_gt("{not json}\n"); }).code(), Errc::kMalformedJson);
  EXPECT_EQ(catch_error([] { parse_gt(R"({"image_id":"a"})"); }).code(), Errc::kMalformedJson);
  EXPECT_EQ(catch_error([] {
              parse_gt(R"({"image_id":"a","study_id":"s","width":1.5,"height":100,"boxes":[]})");
            }).code(),
            Errc::kMalformedJson);
  const Error dup = catch_error([] {
    parse_gt(
        R"({"image_id":"a","study_id":"s","width":10,"height":10,"boxes":[]})"
        "\n\n"
        R"({"image_id":"a","study_id":"t","width":10,"height":10,"boxes":[]})"
        "\n");
  });
  EXPECT_EQ(dup.code(), Errc::kDuplicateImageId);
  EXPECT_EQ(dup.line(), 3u);
  EXPECT_EQ(catch_error([] {
              parse_gt(
                  R"({"image_id":"a","study_id":"s","width":10,"height":10,"boxes":[{"label":"Osteophyte","x_min":0,"y_min":0,"x_max":1,"y_max":1}]})");
            }).code(),
            Errc::kUnknownLabel);
}

TEST(ParseAnnotations, MissingFileIsIo) {
  const Error e = catch_error([] { parse_annotations(std::filesystem::path("/no/such/file.jsonl")); });
  EXPECT_EQ(e.code(), Errc::kIo);
  EXPECT_NE(std::string(e.what()).find("/no/such/file.jsonl"), std::string::npos);
}

TEST(ParseClassifier, ValidOutOfRangeDuplicate) {
  std::istringstream ok(R"({"image_id":"a","score":0.5})");
  EXPECT_EQ(parse_classifier_predictions(ok), (ClassifierScores{{"a", 0.5}}));
  std::istringstream high(R"({"image_id":"a","score":1.2})");
  EXPECT_EQ(catch_error([&] { parse_classifier_predictions(high); }).code(),
            Errc::kScoreOutOfRange);
  std::istringstream dup("{\"image_id\":\"a\",\"score\":0.1}\n{\"image_id\":\"a\",\"score\":0.2}\n");
  const Error e = catch_error([&] { parse_classifier_predictions(dup); });
  EXPECT_EQ(e.code(), Errc::kDuplicateImageId);
  EXPECT_EQ(e.line(), 2u);
}

TEST(ParseDetector, GroupsByImage) {
  std::istringstream in(
      R"({"image_id":"a","detections":[{"label":"Osteophytes","confidence":0.9,"x_min":0,"y_min":0,"x_max":5,"y_max":5},{"label":"Other lesions","confidence":0.2,"x_min":1,"y_min":1,"x_max":4,"y_max":4}]})");
  const DetectorPredictions preds = parse_detector_predictions(in);
  EXPECT_EQ(preds.image_count(), 1u);
  EXPECT_EQ(preds.find("a").size(), 2u);
  EXPECT_TRUE(preds.find("missing").empty());
}

TEST(ParseDetector, RejectsNonDetectionLabelAndBadConfidence) {
  std::istringstream rare(
      R"({"image_id":"a","detections":[{"label":"Fracture","confidence":0.9,"x_min":0,"y_min":0,"x_max":5,"y_max":5}]})");
  EXPECT_EQ(catch_error([&] { parse_detector_predictions(rare); }).code(), Errc::kUnknownLabel);
  std::istringstream conf(
      R"({"image_id":"a","detections":[{"label":"Osteophytes","confidence":-0.1,"x_min":0,"y_min":0,"x_max":5,"y_max":5}]})");
  EXPECT_EQ(catch_error([&] { parse_detector_predictions(conf); }).code(),
            Errc::kConfidenceOutOfRange);
}

TEST(ParseDetector, EmptyFileGivesEmptyMapping) {
  std::istringstream in("");
  EXPECT_EQ(parse_detector_predictions(in).image_count(), 0u);
}

TEST(RoundTrip, AnnotationsSurviveWriteThenParse) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const GroundTruthSet gt = random_gt(rng, 1 + trial * 3);
    std::ostringstream out;
    write_annotations(out, gt);
    EXPECT_EQ(parse_gt(out.str()), gt);
    // A second write is byte-identical.
    std::ostringstream again;
    write_annotations(again, parse_gt(out.str()));
    EXPECT_EQ(again.str(), out.str());
  }
}

TEST(RoundTrip, PredictionsSurviveWriteThenParse) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DetectorPredictions preds;
  ClassifierScores scores;
  for (int i = 0; i < 30; ++i) {
    const std::string id = "img" + std::to_string((i * 7) % 30);
    scores[id] = unit(rng);
    preds.at(id);
    for (int d = 0; d < i % 4; ++d) {
      preds.add(id, Detection{synth::random_box(rng), kDetectionLabels[(i + d) % 7], unit(rng)});
    }
  }
  std::ostringstream det_out;
  write_detector_predictions(det_out, preds);
  std::istringstream det_in(det_out.str());
  EXPECT_EQ(parse_detector_predictions(det_in), preds);

  std::ostringstream cls_out;
  write_classifier_predictions(cls_out, scores);
  std::istringstream cls_in(cls_out.str());
  EXPECT_EQ(parse_classifier_predictions(cls_in), scores);
}

TEST(ComputeStats, CountsAndDemographics) {
  ImageRecord a = synth::image("a", "s1", {synth::lesion(LesionLabel::kOsteophytes, 0, 0, 5, 5),
                                           synth::lesion(LesionLabel::kOsteophytes, 5, 5, 9, 9),
                                           synth::lesion(LesionLabel::kFracture, 1, 1, 2, 2)},
                               200, 100);
  a.age = 40;
  a.sex = Sex::kMale;
  ImageRecord b = synth::image("b", "s1", {}, 100, 100);
  ImageRecord c = synth::image("c", "s2", {}, 300, 100);
  c.age = 60;
  c.sex = Sex::kFemale;
  const SplitStats s = compute_stats(GroundTruthSet({a, b, c}));
  EXPECT_EQ(s.images, 3u);
  EXPECT_EQ(s.studies, 2u);
  EXPECT_EQ(s.normal_images, 2u);
  EXPECT_EQ(s.abnormal_images, 1u);
  EXPECT_EQ(s.boxes, 3u);
  EXPECT_EQ(s.boxes_per_label[static_cast<std::size_t>(LesionLabel::kOsteophytes)], 2u);
  EXPECT_EQ(s.boxes_per_label[static_cast<std::size_t>(LesionLabel::kFracture)], 1u);
  EXPECT_DOUBLE_EQ(s.mean_width, 200.0);
  EXPECT_DOUBLE_EQ(s.mean_age, 50.0);
  EXPECT_EQ(s.min_age, 40);
  EXPECT_EQ(s.max_age, 60);
  EXPECT_EQ(s.male_studies, 1u);
  EXPECT_EQ(s.female_studies, 1u);
}

TEST(ComputeStats, EmptySetIsAllZero) {
  const SplitStats s = compute_stats(GroundTruthSet{});
  EXPECT_EQ(s.images, 0u);
  EXPECT_EQ(s.studies, 0u);
  EXPECT_EQ(s.boxes, 0u);
  EXPECT_EQ(s.mean_width, 0.0);
}

TEST(ComputeStats, TotalsMatchSplitsProperty) {
  std::mt19937_64 rng(3);
  const GroundTruthSet gt = random_gt(rng, 200);
  const SplitAssignment split = stratified_split(gt, 0.7, 5);
  const GroundTruthSet train = select_split(gt, split, Split::kTrain);
  const GroundTruthSet test = select_split(gt, split, Split::kTest);
  const StatsReport report = compute_stats({{"train", &train}, {"test", &test}});
  const SplitStats all = compute_stats(gt);
  EXPECT_EQ(report.total.images, all.images);
  EXPECT_EQ(report.total.studies, all.studies);
  EXPECT_EQ(report.splits[0].images + report.splits[1].images, all.images);
  EXPECT_EQ(all.normal_images + all.abnormal_images, all.images);
  std::size_t per_label = 0;
  for (std::size_t i = 0; i < kNumAbnormalLabels; ++i) {
    EXPECT_EQ(report.splits[0].boxes_per_label[i] + report.splits[1].boxes_per_label[i],
              all.boxes_per_label[i]);
    per_label += all.boxes_per_label[i];
  }
  EXPECT_EQ(per_label, all.boxes);
  std::size_t study_images = 0;
  for (const auto& [id, images] : gt.studies()) study_images += images.size();
  EXPECT_EQ(study_images, all.images);
}

TEST(StratifiedSplit, FiveThousandStudySplit) {
  std::vector<ImageRecord> records;
  for (int s = 0; s < 5000; ++s) {
    std::vector<BoundingBox> boxes;
    if (s % 7 < 3) boxes.push_back(synth::lesion(LesionLabel::kOsteophytes, 0, 0, 5, 5));
    records.push_back(synth::image("i" + std::to_string(s), "s" + std::to_string(s), boxes));
  }
  const SplitAssignment split = stratified_split(GroundTruthSet(records), 0.8, 0);
  EXPECT_EQ(split.count(Split::kTrain), 4000u);
  EXPECT_EQ(split.count(Split::kTest), 1000u);
}

TEST(StratifiedSplit, FullFractionAndErrors) {
  const GroundTruthSet gt({synth::image("a", "s1"), synth::image("b", "s2")});
  const SplitAssignment all = stratified_split(gt, 1.0, 9);
  EXPECT_EQ(all.count(Split::kTrain), 2u);
  EXPECT_EQ(all.count(Split::kTest), 0u);
  EXPECT_EQ(catch_error([&] { stratified_split(gt, 0.0, 1); }).code(), Errc::kInvalidFraction);
  EXPECT_EQ(catch_error([&] { stratified_split(gt, 1.5, 1); }).code(), Errc::kInvalidFraction);
  EXPECT_EQ(catch_error([] { stratified_split(GroundTruthSet{}, 0.5, 1); }).code(),
            Errc::kEmptyDataset);
}

TEST(StratifiedSplit, IndependentOfInputOrder) {
  std::mt19937_64 rng(21);
  const GroundTruthSet gt = random_gt(rng, 300);
  std::vector<ImageRecord> shuffled = gt.records();
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const SplitAssignment a = stratified_split(gt, 0.8, 42);
  const SplitAssignment b = stratified_split(GroundTruthSet(shuffled), 0.8, 42);
  EXPECT_EQ(a.studies, b.studies);
  const SplitAssignment c = stratified_split(gt, 0.8, 43);
  EXPECT_NE(a.studies, c.studies);
}

TEST(StratifiedSplit, PartitionAndBalanceProperty) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const GroundTruthSet gt = random_gt(rng, 1 + static_cast<std::size_t>(rng() % 150));
    const double f = frac(rng);
    const SplitAssignment split = stratified_split(gt, f, rng());
    ASSERT_EQ(split.studies.size(), gt.studies().size());
    const std::size_t n_train = split.count(Split::kTrain);
    if (n_train == 0) continue;
    std::size_t abn_all = 0;
    std::size_t abn_train = 0;
    for (const auto& [study, images] : gt.studies()) {
      const bool abn = abnormality_stratum(gt, images) == "abnormal";
      abn_all += abn;
      if (abn && split.studies.at(study) == Split::kTrain) ++abn_train;
    }
    const double dev = std::abs(static_cast<double>(abn_train) / n_train -
                                static_cast<double>(abn_all) / gt.studies().size());
    EXPECT_LE(dev, 1.0 / n_train + 1e-12) << "trial " << trial;
  }
}

TEST(StratifiedSplit, CustomStratumFunction) {
  std::mt19937_64 rng(5);
  const GroundTruthSet gt = random_gt(rng, 120);
  const SplitAssignment split = stratified_split(gt, 0.5, 1, lesion_set_stratum);
  EXPECT_EQ(split.count(Split::kTrain), 60u);
}

TEST(SplitCsv, HeaderAndSortedRows) {
  const GroundTruthSet gt({synth::image("a", "zeta"), synth::image("b", "alpha")});
  std::ostringstream out;
  write_split_csv(out, stratified_split(gt, 1.0, 0));
  EXPECT_EQ(out.str(), "study_id,split\nalpha,train\nzeta,train\n");
}
