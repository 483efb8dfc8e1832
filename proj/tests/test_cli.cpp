#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "spine_eval/dataset_io.hpp"
#include "synthetic.hpp"

using namespace spine_eval;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spine_eval_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }

  RunResult run(const std::string& args) const {
    const std::string cmd = std::string(SPINE_EVAL_BINARY) + " " + args + " > " +
                            path("stdout.txt").string() + " 2> " + path("stderr.txt").string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(path("stdout.txt"));
    r.err = slurp(path("stderr.txt"));
    return r;
  }

  // Ten studies, two images each; odd studies abnormal.
  fs::path write_annotations_file() const {
    std::vector<ImageRecord> records;
    for (int s = 0; s < 10; ++s) {
      for (int i = 0; i < 2; ++i) {
        std::vector<BoundingBox> boxes;
        if (s % 2 == 1 && i == 0) {
          boxes.push_back(synth::lesion(LesionLabel::kOsteophytes, 10, 10, 40, 40));
          boxes.push_back(synth::lesion(LesionLabel::kFracture, 50, 50, 70, 90));
        }
        records.push_back(synth::image("img" + std::to_string(s) + "_" + std::to_string(i),
                                       "study" + std::to_string(s), boxes));
      }
    }
    std::ofstream out(path("gt.jsonl"), std::ios::binary);
    write_annotations(out, GroundTruthSet(records));
    return path("gt.jsonl");
  }

  // Scores: abnormal images 0.9 - offset, normal 0.1 + offset.
  fs::path write_scores(const std::string& name, double offset,
                        const std::vector<std::string>& skip = {},
                        const std::vector<std::string>& extra = {}) const {
    ClassifierScores scores;
    const GroundTruthSet gt = parse_annotations(path("gt.jsonl"));
    for (const ImageRecord& r : gt.records()) {
      if (std::find(skip.begin(), skip.end(), r.image_id) != skip.end()) continue;
      scores[r.image_id] = r.abnormal() ? 0.9 - offset : 0.1 + offset;
    }
    for (const auto& id : extra) scores[id] = 0.5;
    std::ofstream out(path(name), std::ios::binary);
    write_classifier_predictions(out, scores);
    return path(name);
  }

  fs::path write_perfect_detections(const std::string& name) const {
    const GroundTruthSet gt = parse_annotations(path("gt.jsonl"));
    DetectorPredictions preds;
    for (const ImageRecord& r : gt.records()) {
      preds.at(r.image_id);
      for (const BoundingBox& b : r.boxes) {
        preds.add(r.image_id, {b.rect, remap_to_detection_label(b.label), 0.4});
      }
    }
    std::ofstream out(path(name), std::ios::binary);
    write_detector_predictions(out, preds);
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, StatsRendersLesionRows) {
  const auto gt = write_annotations_file();
  const RunResult r = run("stats --annotations " + gt.string() + " --format csv");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Number of images,20"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("6. Osteophytes,5"), std::string::npos);
  EXPECT_NE(r.out.find("5. Fracture,5"), std::string::npos);
}

TEST_F(CliTest, StatsEmptyFileIsAllZero) {
  const auto empty = write("empty.jsonl", "");
  const RunResult r = run("stats --annotations " + empty.string() + " --format csv");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Number of images,0"), std::string::npos);
  EXPECT_NE(r.out.find("6. Osteophytes,0"), std::string::npos);
}

TEST_F(CliTest, StatsMissingFileExitsTwoWithPath) {
  const RunResult r = run("stats --annotations " + path("nope.jsonl").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("nope.jsonl"), std::string::npos);
}

TEST_F(CliTest, StatsParseErrorExitsTwo) {
  const auto bad = write("bad.jsonl", "{\"image_id\": 3}\n");
  EXPECT_EQ(run("stats --annotations " + bad.string()).exit_code, 2);
}

TEST_F(CliTest, SplitIsDeterministicAcrossRunsAndThreads) {
  const auto gt = write_annotations_file();
  const RunResult a = run("split --annotations " + gt.string() + " --fraction 0.8 --seed 3 --threads 1");
  const RunResult b = run("split --annotations " + gt.string() + " --fraction 0.8 --seed 3 --threads 8");
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("study_id,split\n", 0), 0u);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 11);
  EXPECT_NE(a.err.find("train: 8 studies"), std::string::npos) << a.err;
}

TEST_F(CliTest, SplitRejectsBadFraction) {
  const auto gt = write_annotations_file();
  EXPECT_EQ(run("split --annotations " + gt.string() + " --fraction 1.5").exit_code, 2);
}

TEST_F(CliTest, SplitWritesOutFile) {
  const auto gt = write_annotations_file();
  const RunResult r = run("split --annotations " + gt.string() + " --fraction 0.5 --out " +
                          path("split.csv").string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(slurp(path("split.csv")).rfind("study_id,split\n", 0), 0u);
  EXPECT_NE(r.out.find("test: 5 studies"), std::string::npos);
}

TEST_F(CliTest, EvalClsThreeModelsPlusEnsemble) {
  const auto gt = write_annotations_file();
  const auto m1 = write_scores("densenet121.jsonl", 0.0);
  const auto m2 = write_scores("densenet169.jsonl", 0.1);
  const auto m3 = write_scores("densenet201.jsonl", 0.2);
  const RunResult r = run("eval-cls --annotations " + gt.string() + " --preds " + m1.string() +
                          " --preds " + m2.string() + " --preds " + m3.string() +
                          " --bootstrap 200 --format csv");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_NE(r.out.find("densenet121,"), std::string::npos);
  EXPECT_NE(r.out.find("\nEnsemble,"), std::string::npos);
}

TEST_F(CliTest, EvalClsAutoCutoffPrintsYouden) {
  const auto gt = write_annotations_file();
  const auto m1 = write_scores("model.jsonl", 0.0);
  const RunResult r = run("eval-cls --annotations " + gt.string() + " --preds " + m1.string() +
                          " --cutoff auto --bootstrap 100");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("c* = 0.9000 (J = 1.0000)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("100.00 (100.00,100.00)"), std::string::npos);
}

TEST_F(CliTest, EvalClsMissingImageExitsTwoNamingIt) {
  const auto gt = write_annotations_file();
  const auto m1 = write_scores("model.jsonl", 0.0, {"img3_1"});
  const RunResult r = run("eval-cls --annotations " + gt.string() + " --preds " + m1.string() +
                          " --bootstrap 10");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("img3_1"), std::string::npos);
}

TEST_F(CliTest, EvalClsStrictControlsUnknownImages) {
  const auto gt = write_annotations_file();
  const auto m1 = write_scores("model.jsonl", 0.0, {}, {"stranger"});
  const std::string base = "eval-cls --annotations " + gt.string() + " --preds " + m1.string() +
                           " --bootstrap 10";
  EXPECT_EQ(run(base).exit_code, 2);
  const RunResult lax = run(base + " --no-strict");
  EXPECT_EQ(lax.exit_code, 0) << lax.err;
  EXPECT_NE(lax.err.find("warning"), std::string::npos);
}

TEST_F(CliTest, EvalClsJsonIsByteStable) {
  const auto gt = write_annotations_file();
  const auto m1 = write_scores("model.jsonl", 0.15);
  const std::string cmd = "eval-cls --annotations " + gt.string() + " --preds " + m1.string() +
                          " --bootstrap 300 --seed 9 --format json";
  const RunResult a = run(cmd + " --threads 1");
  const RunResult b = run(cmd + " --threads 4");
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, EvalDetPerfectAndEmpty) {
  const auto gt = write_annotations_file();
  const auto perfect = write_perfect_detections("perfect.jsonl");
  const RunResult r = run("eval-det --annotations " + gt.string() + " --det-preds " +
                          perfect.string() + " --format csv");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Detector,LT2,LT4,LT6,LT8,LT10,LT11,LT13,mAP@0.5\n"), std::string::npos);
  EXPECT_NE(r.out.find("perfect,-,-,100.00,-,-,-,100.00,100.00"), std::string::npos) << r.out;

  const auto empty = write("empty.jsonl", "");
  const RunResult e = run("eval-det --annotations " + gt.string() + " --det-preds " +
                          empty.string() + " --format csv");
  ASSERT_EQ(e.exit_code, 0) << e.err;
  EXPECT_NE(e.out.find("empty,-,-,0.00,-,-,-,0.00,0.00"), std::string::npos) << e.out;
}

TEST_F(CliTest, EvalDetUnknownLabelExitsTwo) {
  const auto gt = write_annotations_file();
  const auto bad = write("bad.jsonl",
                         R"({"image_id":"img1_0","detections":[{"label":"Fracture","confidence":0.5,"x_min":0,"y_min":0,"x_max":5,"y_max":5}]})"
                         "\n");
  EXPECT_EQ(run("eval-det --annotations " + gt.string() + " --det-preds " + bad.string()).exit_code, 2);
}

TEST_F(CliTest, FuseGateWithZeroCutoffIsIdentity) {
  write_annotations_file();
  const auto cls = write_scores("cls.jsonl", 0.0);
  const auto det = write_perfect_detections("det.jsonl");
  const RunResult r = run("fuse --cls-preds " + cls.string() + " --det-preds " + det.string() +
                          " --cutoff 0 --direction gate --out " + path("fused.jsonl").string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(parse_detector_predictions(path("fused.jsonl")), parse_detector_predictions(det));
}

TEST_F(CliTest, FuseGateDropsLowBoxesOnNormalImages) {
  write_annotations_file();
  const auto cls = write_scores("cls.jsonl", 0.0);
  const auto det = write_perfect_detections("det.jsonl");  // all boxes at 0.4
  // Cutoff above every score: every image is gated and 0.4 < floor 0.5.
  const RunResult r = run("fuse --cls-preds " + cls.string() + " --det-preds " + det.string() +
                          " --cutoff 0.95 --out " + path("fused.jsonl").string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(parse_detector_predictions(path("fused.jsonl")).detection_count(), 0u);
}

TEST_F(CliTest, FuseBoostWithoutDetectionsHalves) {
  write_annotations_file();
  const auto cls = write_scores("cls.jsonl", 0.0);
  const auto empty = write("empty.jsonl", "");
  const RunResult r = run("fuse --cls-preds " + cls.string() + " --det-preds " + empty.string() +
                          " --direction boost --out " + path("boosted.jsonl").string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const ClassifierScores before = parse_classifier_predictions(cls);
  const ClassifierScores after = parse_classifier_predictions(path("boosted.jsonl"));
  ASSERT_EQ(after.size(), before.size());
  for (const auto& [id, s] : before) EXPECT_EQ(after.at(id), s / 2.0);
}

TEST_F(CliTest, FuseMissingClassifierScoreExitsTwo) {
  write_annotations_file();
  const auto cls = write_scores("cls.jsonl", 0.0, {"img1_0"});
  const auto det = write_perfect_detections("det.jsonl");
  const RunResult r = run("fuse --cls-preds " + cls.string() + " --det-preds " + det.string() +
                          " --cutoff 0.5");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("img1_0"), std::string::npos);
}

TEST_F(CliTest, FuseAutoCutoffNeedsAnnotations) {
  const auto gt = write_annotations_file();
  const auto cls = write_scores("cls.jsonl", 0.0);
  const auto det = write_perfect_detections("det.jsonl");
  const std::string base = "fuse --cls-preds " + cls.string() + " --det-preds " + det.string() +
                           " --cutoff auto";
  EXPECT_EQ(run(base).exit_code, 2);
  EXPECT_EQ(run(base + " --annotations " + gt.string()).exit_code, 0);
}

TEST_F(CliTest, UnknownSubcommandOrFlagExitsTwo) {
  EXPECT_EQ(run("frobnicate").exit_code, 2);
  EXPECT_EQ(run("stats --bogus").exit_code, 2);
  EXPECT_EQ(run("--help").exit_code, 0);
}
