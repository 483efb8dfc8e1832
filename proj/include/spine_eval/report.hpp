#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spine_eval/classification.hpp"
#include "spine_eval/dataset_io.hpp"
#include "spine_eval/detection.hpp"
#include "spine_eval/resampling.hpp"

namespace spine_eval {

enum class ReportFormat { kCsv, kMarkdown, kJson };

ReportFormat parse_report_format(const std::string& name);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// CSV (RFC 4180 quoting) or a GitHub-style markdown table.
void render_table(std::ostream& out, const Table& table, ReportFormat format);

// Fraction rendered as a percentage with two decimals, e.g. 0.88614 -> "88.61".
std::string percent(double fraction);

// One row of a classification report.
struct ClassifierRow {
  std::string name;
  OperatingPoint operating_point;  // cutoff used for F1/sensitivity/specificity
  bool cutoff_from_youden = false;
  BootstrapEstimate auroc;
  BootstrapEstimate f1;
  BootstrapEstimate sensitivity;
  BootstrapEstimate specificity;
};

struct DetectorRow {
  std::string name;
  MeanApReport result;
};

void write_stats_report(std::ostream& out, const StatsReport& report, ReportFormat format);
void write_classification_report(std::ostream& out, const std::vector<ClassifierRow>& rows,
                                 ReportFormat format);
void write_detection_report(std::ostream& out, const std::vector<DetectorRow>& rows,
                            double iou_threshold, ReportFormat format);

}  // namespace spine_eval
