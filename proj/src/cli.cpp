#include "spine_eval/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "spine_eval/classification.hpp"
#include "spine_eval/dataset_io.hpp"
#include "spine_eval/detection.hpp"
#include "spine_eval/error.hpp"
#include "spine_eval/fusion.hpp"
#include "spine_eval/parallel.hpp"
#include "spine_eval/report.hpp"
#include "spine_eval/resampling.hpp"

namespace spine_eval {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::vector<std::string> annotations;
  std::vector<std::string> preds;
  std::vector<std::string> cls_preds;
  std::string det_preds;
  std::string cutoff = "auto";
  double floor = 0.5;
  double iou = 0.5;
  std::size_t bootstrap = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  double fraction = 0.8;
  std::string direction = "gate";
  std::string format = "markdown";
  std::string out;
  unsigned threads = 0;
  bool strict = true;
};

// Sink for the main output: the --out file, or the caller's stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(Errc::kIo, "cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }
  bool to_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

unsigned resolve_threads(unsigned requested) {
  return requested == 0 ? default_threads() : requested;
}

std::optional<double> parse_cutoff(const std::string& text) {
  if (text == "auto") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 0.0 && v <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "--cutoff must be \"auto\" or a number in [0,1]");
  }
  return v;
}

// Predictions for images the annotations do not know: fatal when strict,
// otherwise dropped with a warning.
template <typename Ids>
std::vector<std::string> unknown_images(const GroundTruthSet& gt, const Ids& ids) {
  std::vector<std::string> extra;
  for (const auto& id : ids) {
    if (!gt.find(id)) extra.push_back(id);
  }
  return extra;
}

void police_extra(const std::vector<std::string>& extra, const std::string& source,
                  bool strict, std::ostream& err) {
  if (extra.empty()) return;
  const std::string msg = source + ": " + std::to_string(extra.size()) +
                          " predicted image(s) not in annotations, first: " + extra.front();
  if (strict) throw Error(Errc::kMismatchedImageSets, msg);
  err << "warning: " << msg << " (ignored)\n";
}

ClassifierScores restrict_to(const ClassifierScores& scores, const GroundTruthSet& gt) {
  ClassifierScores out;
  for (const auto& [id, s] : scores) {
    if (gt.find(id)) out.emplace(id, s);
  }
  return out;
}

ClassifierRow evaluate_classifier(const std::string& name, const LabeledScores& data,
                                  std::optional<double> cutoff, const RunConfig& cfg) {
  ClassifierRow row;
  row.name = name;
  if (cutoff) {
    const ThresholdMetrics m = confusion_at(data, *cutoff);
    row.operating_point = {*cutoff, m.sensitivity, m.specificity,
                           m.sensitivity + m.specificity - 1.0};
  } else {
    row.operating_point = youden_optimal(data);
    row.cutoff_from_youden = true;
  }
  const double c = row.operating_point.cutoff;
  BootstrapOptions opts;
  opts.n_resamples = cfg.bootstrap;
  opts.alpha = cfg.alpha;
  opts.seed = cfg.seed;
  opts.threads = resolve_threads(cfg.threads);
  row.auroc = bootstrap_ci([](const LabeledScores& d) { return auroc(d); }, data, opts);
  row.f1 = bootstrap_ci([c](const LabeledScores& d) { return confusion_at(d, c).f1; }, data, opts);
  row.sensitivity = bootstrap_ci(
      [c](const LabeledScores& d) { return confusion_at(d, c).sensitivity; }, data, opts);
  row.specificity = bootstrap_ci(
      [c](const LabeledScores& d) { return confusion_at(d, c).specificity; }, data, opts);
  return row;
}

void cmd_stats(const RunConfig& cfg, std::ostream& out) {
  std::vector<GroundTruthSet> sets;
  sets.reserve(cfg.annotations.size());
  for (const auto& path : cfg.annotations) sets.push_back(parse_annotations(fs::path(path)));
  std::vector<std::pair<std::string, const GroundTruthSet*>> named;
  for (std::size_t i = 0; i < sets.size(); ++i) named.emplace_back(stem(cfg.annotations[i]), &sets[i]);
  Output sink(cfg.out, out);
  write_stats_report(sink.stream(), compute_stats(named), parse_report_format(cfg.format));
}

void cmd_split(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const GroundTruthSet gt = parse_annotations(fs::path(cfg.annotations.front()));
  const SplitAssignment split = stratified_split(gt, cfg.fraction, cfg.seed);
  Output sink(cfg.out, out);
  write_split_csv(sink.stream(), split);

  std::ostream& summary = sink.to_file() ? out : err;
  std::size_t abnormal[2] = {0, 0};
  std::size_t totals[2] = {0, 0};
  for (const auto& [study, which] : split.studies) {
    const int k = which == Split::kTrain ? 0 : 1;
    ++totals[k];
    if (abnormality_stratum(gt, gt.studies().at(study)) == "abnormal") ++abnormal[k];
  }
  const auto frac = [](std::size_t a, std::size_t n) {
    return n == 0 ? std::string("-") : percent(static_cast<double>(a) / static_cast<double>(n));
  };
  summary << "train: " << totals[0] << " studies, " << frac(abnormal[0], totals[0])
          << "% abnormal\n"
          << "test: " << totals[1] << " studies, " << frac(abnormal[1], totals[1])
          << "% abnormal\n"
          << "all: " << totals[0] + totals[1] << " studies, "
          << frac(abnormal[0] + abnormal[1], totals[0] + totals[1]) << "% abnormal\n";
}

void cmd_eval_cls(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.preds.empty()) throw Error(Errc::kInvalidArgument, "eval-cls needs --preds");
  const GroundTruthSet gt = parse_annotations(fs::path(cfg.annotations.front()));
  const std::optional<double> cutoff = parse_cutoff(cfg.cutoff);

  std::vector<ClassifierScores> models;
  for (const auto& path : cfg.preds) {
    ClassifierScores scores = parse_classifier_predictions(fs::path(path));
    std::vector<std::string> ids;
    for (const auto& kv : scores) ids.push_back(kv.first);
    police_extra(unknown_images(gt, ids), path, cfg.strict, err);
    models.push_back(restrict_to(scores, gt));
  }

  std::vector<ClassifierRow> rows;
  for (std::size_t m = 0; m < models.size(); ++m) {
    rows.push_back(evaluate_classifier(stem(cfg.preds[m]), join_labels(gt, models[m]), cutoff, cfg));
  }
  if (models.size() > 1) {
    rows.push_back(evaluate_classifier("Ensemble", join_labels(gt, ensemble_average(models)),
                                       cutoff, cfg));
  }
  Output sink(cfg.out, out);
  write_classification_report(sink.stream(), rows, parse_report_format(cfg.format));
}

void cmd_eval_det(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.det_preds.empty()) throw Error(Errc::kInvalidArgument, "eval-det needs --det-preds");
  const GroundTruthSet gt = parse_annotations(fs::path(cfg.annotations.front()));
  DetectorPredictions preds = parse_detector_predictions(fs::path(cfg.det_preds));
  std::vector<std::string> ids;
  for (const auto& e : preds.entries()) ids.push_back(e.image_id);
  const auto extra = unknown_images(gt, ids);
  police_extra(extra, cfg.det_preds, cfg.strict, err);
  if (!extra.empty()) {
    DetectorPredictions kept;
    for (const auto& e : preds.entries()) {
      if (gt.find(e.image_id)) kept.at(e.image_id) = e.detections;
    }
    preds = std::move(kept);
  }
  const MeanApReport result = mean_ap(gt, preds, cfg.iou, resolve_threads(cfg.threads));
  Output sink(cfg.out, out);
  write_detection_report(sink.stream(), {{stem(cfg.det_preds), result}}, cfg.iou,
                         parse_report_format(cfg.format));
}

void cmd_fuse(const RunConfig& cfg, std::ostream& out) {
  if (cfg.cls_preds.empty() || cfg.det_preds.empty()) {
    throw Error(Errc::kInvalidArgument, "fuse needs --cls-preds and --det-preds");
  }
  std::vector<ClassifierScores> models;
  for (const auto& path : cfg.cls_preds) models.push_back(parse_classifier_predictions(fs::path(path)));
  const ClassifierScores scores = models.size() == 1 ? models.front() : ensemble_average(models);
  const DetectorPredictions detections = parse_detector_predictions(fs::path(cfg.det_preds));

  if (cfg.direction == "boost") {
    const ClassifierScores boosted = fuse_boost(scores, detections);
    Output sink(cfg.out, out);
    write_classifier_predictions(sink.stream(), boosted);
    return;
  }
  if (cfg.direction != "gate") {
    throw Error(Errc::kInvalidArgument, "--direction must be gate or boost");
  }
  FusionConfig fusion;
  fusion.floor = cfg.floor;
  if (auto c = parse_cutoff(cfg.cutoff)) {
    fusion.cutoff = *c;
  } else {
    if (cfg.annotations.empty()) {
      throw Error(Errc::kInvalidArgument, "--cutoff auto needs --annotations for calibration");
    }
    const GroundTruthSet gt = parse_annotations(fs::path(cfg.annotations.front()));
    fusion.cutoff = youden_optimal(join_labels(gt, scores)).cutoff;
    fusion.cutoff = std::min(fusion.cutoff, 1.0);
  }
  const DetectorPredictions gated = fuse_gate(scores, detections, fusion);
  Output sink(cfg.out, out);
  write_detector_predictions(sink.stream(), gated);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluation and fusion harness for spine radiograph classifiers and detectors",
               "spine-eval"};
  app.require_subcommand(1);
  RunConfig cfg;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", cfg.format, "Report format")
        ->check(CLI::IsMember({"csv", "markdown", "json"}))
        ->capture_default_str();
    sub->add_option("--out", cfg.out, "Output path (default: stdout)");
    sub->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
    sub->add_flag("--strict,!--no-strict", cfg.strict,
                  "Abort on predicted images missing from the annotations")
        ->capture_default_str();
  };

  auto* stats = app.add_subcommand("stats", "Dataset statistics per annotation file");
  stats->add_option("--annotations", cfg.annotations, "Ground-truth JSONL (repeatable)")->required();
  add_common(stats);

  auto* split = app.add_subcommand("split", "Study-level stratified train/test split");
  split->add_option("--annotations", cfg.annotations, "Ground-truth JSONL")->required();
  split->add_option("--fraction", cfg.fraction, "Train fraction in (0,1]")->capture_default_str();
  split->add_option("--seed", cfg.seed, "PRNG seed")->capture_default_str();
  add_common(split);

  auto* eval_cls = app.add_subcommand("eval-cls", "Classification report with bootstrap CIs");
  eval_cls->add_option("--annotations", cfg.annotations, "Ground-truth JSONL")->required();
  eval_cls->add_option("--preds", cfg.preds, "Classifier predictions JSONL (repeatable)")->required();
  eval_cls->add_option("--cutoff", cfg.cutoff, "Cutoff value or \"auto\" (Youden)")->capture_default_str();
  eval_cls->add_option("--bootstrap", cfg.bootstrap, "Bootstrap resamples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cls->add_option("--alpha", cfg.alpha, "1 - confidence level")->capture_default_str();
  eval_cls->add_option("--seed", cfg.seed, "PRNG seed")->capture_default_str();
  add_common(eval_cls);

  auto* eval_det = app.add_subcommand("eval-det", "Per-class AP and mAP report");
  eval_det->add_option("--annotations", cfg.annotations, "Ground-truth JSONL")->required();
  eval_det->add_option("--det-preds", cfg.det_preds, "Detector predictions JSONL")->required();
  eval_det->add_option("--iou", cfg.iou, "IoU threshold for a true positive")->capture_default_str();
  add_common(eval_det);

  auto* fuse = app.add_subcommand("fuse", "Combine classifier and detector predictions");
  fuse->add_option("--cls-preds", cfg.cls_preds, "Classifier predictions JSONL (repeatable)")->required();
  fuse->add_option("--det-preds", cfg.det_preds, "Detector predictions JSONL")->required();
  fuse->add_option("--cutoff", cfg.cutoff, "Classifier cutoff or \"auto\" (needs --annotations)")
      ->capture_default_str();
  fuse->add_option("--floor", cfg.floor, "Box confidence floor below the cutoff")->capture_default_str();
  fuse->add_option("--direction", cfg.direction, "gate or boost")
      ->check(CLI::IsMember({"gate", "boost"}))
      ->capture_default_str();
  fuse->add_option("--annotations", cfg.annotations, "Ground truth for --cutoff auto");
  add_common(fuse);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (stats->parsed()) cmd_stats(cfg, out);
    if (split->parsed()) cmd_split(cfg, out, err);
    if (eval_cls->parsed()) cmd_eval_cls(cfg, out, err);
    if (eval_det->parsed()) cmd_eval_det(cfg, out, err);
    if (fuse->parsed()) cmd_fuse(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace spine_eval
