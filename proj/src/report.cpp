#include "spine_eval/report.hpp"

#include <cstdio>

#include <json.hpp>

#include "spine_eval/error.hpp"

namespace spine_eval {
namespace {

using json = nlohmann::json;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string with_ci(const BootstrapEstimate& e) {
  return percent(e.point) + " (" + percent(e.ci_low) + "," + percent(e.ci_high) + ")";
}

json estimate_json(const BootstrapEstimate& e) {
  return json{{"point", e.point},
              {"ci_low", e.ci_low},
              {"ci_high", e.ci_high},
              {"n_resamples", e.n_resamples},
              {"n_skipped", e.n_skipped},
              {"alpha", e.alpha},
              {"seed", e.seed}};
}

json split_json(const SplitStats& s) {
  json labels = json::object();
  for (std::size_t i = 0; i < kNumAbnormalLabels; ++i) {
    labels[std::string(render_label(static_cast<LesionLabel>(i)))] = s.boxes_per_label[i];
  }
  json out{{"name", s.name},
           {"studies", s.studies},
           {"images", s.images},
           {"normal_images", s.normal_images},
           {"abnormal_images", s.abnormal_images},
           {"boxes", s.boxes},
           {"boxes_per_label", labels},
           {"mean_width", s.mean_width},
           {"mean_height", s.mean_height},
           {"studies_with_age", s.studies_with_age},
           {"studies_with_sex", s.studies_with_sex},
           {"male_studies", s.male_studies},
           {"female_studies", s.female_studies}};
  if (s.studies_with_age > 0) {
    out["mean_age"] = s.mean_age;
    out["min_age"] = s.min_age;
    out["max_age"] = s.max_age;
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown") return ReportFormat::kMarkdown;
  if (name == "json") return ReportFormat::kJson;
  throw Error(Errc::kInvalidArgument, "unknown format \"" + name + "\"");
}

std::string percent(double fraction) { return fixed(fraction * 100.0, 2); }

void render_table(std::ostream& out, const Table& table, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    const auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << csv_field(cells[i]);
      }
      out << '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
    return;
  }
  const auto line = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (const auto& c : cells) out << ' ' << c << " |";
    out << '\n';
  };
  line(table.header);
  out << '|';
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? " ---: |" : " --- |");
  out << '\n';
  for (const auto& row : table.rows) line(row);
}

void write_stats_report(std::ostream& out, const StatsReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json splits = json::array();
    for (const SplitStats& s : report.splits) splits.push_back(split_json(s));
    out << json{{"splits", splits}, {"total", split_json(report.total)}}.dump(2) << '\n';
    return;
  }
  std::vector<const SplitStats*> cols;
  for (const SplitStats& s : report.splits) cols.push_back(&s);
  if (report.splits.size() != 1) cols.push_back(&report.total);

  Table t;
  t.header.push_back("Characteristic");
  for (const SplitStats* s : cols) t.header.push_back(s->name);
  const auto row = [&](std::string name, auto&& cell) {
    std::vector<std::string> r{std::move(name)};
    for (const SplitStats* s : cols) r.push_back(cell(*s));
    t.rows.push_back(std::move(r));
  };
  const auto count = [](std::size_t v) { return std::to_string(v); };
  row("Number of studies", [&](const SplitStats& s) { return count(s.studies); });
  row("Number of images", [&](const SplitStats& s) { return count(s.images); });
  row("Number of normal images", [&](const SplitStats& s) { return count(s.normal_images); });
  row("Number of abnormal images", [&](const SplitStats& s) { return count(s.abnormal_images); });
  row("Image size (mean)", [&](const SplitStats& s) {
    return fixed(s.mean_width, 0) + " x " + fixed(s.mean_height, 0);
  });
  row("Age (mean [range])", [&](const SplitStats& s) -> std::string {
    if (s.studies_with_age == 0) return "-";
    return fixed(s.mean_age, 0) + " [" + std::to_string(s.min_age) + " - " +
           std::to_string(s.max_age) + "]";
  });
  row("Male (%)", [&](const SplitStats& s) -> std::string {
    if (s.studies_with_sex == 0) return "-";
    return percent(static_cast<double>(s.male_studies) / static_cast<double>(s.studies_with_sex));
  });
  row("Female (%)", [&](const SplitStats& s) -> std::string {
    if (s.studies_with_sex == 0) return "-";
    return percent(static_cast<double>(s.female_studies) /
                   static_cast<double>(s.studies_with_sex));
  });
  for (std::size_t i = 0; i < kNumAbnormalLabels; ++i) {
    row(std::to_string(i + 1) + ". " + std::string(render_label(static_cast<LesionLabel>(i))),
        [&](const SplitStats& s) { return count(s.boxes_per_label[i]); });
  }
  render_table(out, t, format);
}

void write_classification_report(std::ostream& out, const std::vector<ClassifierRow>& rows,
                                 ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json models = json::array();
    for (const ClassifierRow& r : rows) {
      models.push_back(json{{"name", r.name},
                            {"cutoff", r.operating_point.cutoff},
                            {"cutoff_from_youden", r.cutoff_from_youden},
                            {"youden", r.operating_point.youden},
                            {"auroc", estimate_json(r.auroc)},
                            {"f1", estimate_json(r.f1)},
                            {"sensitivity", estimate_json(r.sensitivity)},
                            {"specificity", estimate_json(r.specificity)}});
    }
    out << json{{"models", models}}.dump(2) << '\n';
    return;
  }
  Table t;
  t.header = {"Classifier", "Cutoff", "AUROC", "F1 score", "Sensitivity", "Specificity"};
  if (format == ReportFormat::kCsv) t.header.push_back("Bootstrap skipped");
  std::size_t skipped = 0;
  for (const ClassifierRow& r : rows) {
    std::vector<std::string> cells{r.name, fixed(r.operating_point.cutoff, 4), with_ci(r.auroc),
                                   with_ci(r.f1), with_ci(r.sensitivity),
                                   with_ci(r.specificity)};
    const std::size_t row_skipped = std::max({r.auroc.n_skipped, r.f1.n_skipped,
                                              r.sensitivity.n_skipped, r.specificity.n_skipped});
    if (format == ReportFormat::kCsv) cells.push_back(std::to_string(row_skipped));
    skipped = std::max(skipped, row_skipped);
    t.rows.push_back(std::move(cells));
  }
  render_table(out, t, format);
  if (format == ReportFormat::kMarkdown && !rows.empty()) {
    const BootstrapEstimate& e = rows.front().auroc;
    out << "\nPercent with " << fixed((1.0 - e.alpha) * 100.0, 0) << "% bootstrap CI ("
        << e.n_resamples << " resamples, seed " << e.seed << ", skipped " << skipped << ").\n";
    for (const ClassifierRow& r : rows) {
      if (r.cutoff_from_youden) {
        out << r.name << ": Youden-optimal c* = " << fixed(r.operating_point.cutoff, 4)
            << " (J = " << fixed(r.operating_point.youden, 4) << ")\n";
      }
    }
  }
}

void write_detection_report(std::ostream& out, const std::vector<DetectorRow>& rows,
                            double iou_threshold, ReportFormat format) {
  char iou_text[32];
  std::snprintf(iou_text, sizeof iou_text, "%g", iou_threshold);
  const std::string map_name = std::string("mAP@") + iou_text;
  if (format == ReportFormat::kJson) {
    json detectors = json::array();
    for (const DetectorRow& r : rows) {
      json classes = json::object();
      for (std::size_t c = 0; c < kNumDetectionLabels; ++c) {
        json entry{{"label", std::string(render_label(kDetectionLabels[c]))},
                   {"num_ground_truth", r.result.num_ground_truth[c]},
                   {"num_predictions", r.result.num_predictions[c]}};
        entry["ap"] = r.result.ap[c] ? json(*r.result.ap[c]) : json(nullptr);
        classes[std::string(label_code(kDetectionLabels[c]))] = entry;
      }
      detectors.push_back(json{{"name", r.name},
                               {"classes", classes},
                               {"map", r.result.map ? json(*r.result.map) : json(nullptr)}});
    }
    out << json{{"iou_threshold", iou_threshold}, {"detectors", detectors}}.dump(2) << '\n';
    return;
  }
  Table t;
  t.header.push_back("Detector");
  for (DetectionLabel l : kDetectionLabels) t.header.emplace_back(label_code(l));
  t.header.push_back(map_name);
  for (const DetectorRow& r : rows) {
    std::vector<std::string> cells{r.name};
    for (const auto& ap : r.result.ap) cells.push_back(ap ? percent(*ap) : "-");
    cells.push_back(r.result.map ? percent(*r.result.map) : "-");
    t.rows.push_back(std::move(cells));
  }
  render_table(out, t, format);
}

}  // namespace spine_eval
