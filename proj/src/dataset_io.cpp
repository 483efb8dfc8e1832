#include "spine_eval/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "spine_eval/error.hpp"
#include "spine_eval/random.hpp"

namespace spine_eval {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return in;
}

// Calls fn(object, line_no) for every non-blank line.
template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) {
      throw Error(Errc::kMalformedJson, "not valid JSON", line_no);
    }
    if (!obj.is_object()) {
      throw Error(Errc::kMalformedJson, "expected a JSON object", line_no);
    }
    try {
      fn(obj, line_no);
    } catch (const Error& e) {
      if (e.line()) throw;
      // Re-raise with the line attached; strip the "Code: " prefix.
      std::string msg = e.what();
      const auto pos = msg.find(": ");
      if (pos != std::string::npos) msg = msg.substr(pos + 2);
      throw Error(e.code(), msg, line_no, e.details());
    }
  }
  if (in.bad()) throw Error(Errc::kIo, "read failure");
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(Errc::kMalformedJson, std::string("missing field \"") + key + "\"");
  }
  return *it;
}

std::string string_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_string()) {
    throw Error(Errc::kMalformedJson, std::string("field \"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

double number_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number()) {
    throw Error(Errc::kMalformedJson, std::string("field \"") + key + "\" must be a number");
  }
  return v.get<double>();
}

int int_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number_integer()) {
    throw Error(Errc::kMalformedJson, std::string("field \"") + key + "\" must be an integer");
  }
  return v.get<int>();
}

const json& array_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_array()) {
    throw Error(Errc::kMalformedJson, std::string("field \"") + key + "\" must be an array");
  }
  return v;
}

Box read_box(const json& obj) {
  if (!obj.is_object()) throw Error(Errc::kMalformedJson, "box must be an object");
  return Box{number_field(obj, "x_min"), number_field(obj, "y_min"),
             number_field(obj, "x_max"), number_field(obj, "y_max")};
}

void write_box(ordered_json& obj, const Box& b) {
  obj["x_min"] = b.x_min;
  obj["y_min"] = b.y_min;
  obj["x_max"] = b.x_max;
  obj["y_max"] = b.y_max;
}

void check_unit_interval(double v, Errc code, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(code, std::string(what) + " " + std::to_string(v) + " outside [0,1]");
  }
}

void check_detection_box(const Box& b) {
  std::vector<std::string> problems;
  if (!std::isfinite(b.x_min) || !std::isfinite(b.y_min) ||
      !std::isfinite(b.x_max) || !std::isfinite(b.y_max)) {
    problems.emplace_back("non-finite coordinate");
  } else {
    if (b.x_min < 0.0 || b.y_min < 0.0) problems.emplace_back("negative coordinate");
    if (!(b.x_min < b.x_max)) problems.emplace_back("zero or negative width");
    if (!(b.y_min < b.y_max)) problems.emplace_back("zero or negative height");
  }
  if (!problems.empty()) {
    std::string msg = "detection box: " + problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw Error(Errc::kInvalidBox, msg, std::nullopt, problems);
  }
}

}  // namespace

GroundTruthSet parse_annotations(std::istream& in) {
  std::vector<ImageRecord> records;
  std::unordered_set<std::string> seen;
  for_each_json_line(in, [&](const json& obj, std::size_t line_no) {
    ImageRecord rec;
    rec.image_id = string_field(obj, "image_id");
    rec.study_id = string_field(obj, "study_id");
    rec.width = int_field(obj, "width");
    rec.height = int_field(obj, "height");
    for (const json& b : array_field(obj, "boxes")) {
      BoundingBox box;
      box.rect = read_box(b);
      box.label = parse_label(string_field(b, "label"));
      rec.boxes.push_back(box);
    }
    if (auto it = obj.find("age"); it != obj.end() && !it->is_null()) {
      if (!it->is_number_integer()) {
        throw Error(Errc::kMalformedJson, "field \"age\" must be an integer");
      }
      rec.age = it->get<int>();
    }
    if (auto it = obj.find("sex"); it != obj.end() && !it->is_null()) {
      const std::string s = it->is_string() ? it->get<std::string>() : "";
      if (s == "M") {
        rec.sex = Sex::kMale;
      } else if (s == "F") {
        rec.sex = Sex::kFemale;
      } else {
        throw Error(Errc::kMalformedJson, "field \"sex\" must be \"M\" or \"F\"");
      }
    }
    validate_record(rec);
    if (!seen.insert(rec.image_id).second) {
      throw Error(Errc::kDuplicateImageId,
                  "image_id \"" + rec.image_id + "\" appears more than once", line_no);
    }
    records.push_back(std::move(rec));
  });
  return GroundTruthSet(std::move(records));
}

GroundTruthSet parse_annotations(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_annotations(in);
}

ClassifierScores parse_classifier_predictions(std::istream& in) {
  ClassifierScores scores;
  for_each_json_line(in, [&](const json& obj, std::size_t line_no) {
    std::string id = string_field(obj, "image_id");
    const double score = number_field(obj, "score");
    check_unit_interval(score, Errc::kScoreOutOfRange, "score");
    if (!scores.emplace(id, score).second) {
      throw Error(Errc::kDuplicateImageId,
                  "image_id \"" + id + "\" appears more than once", line_no);
    }
  });
  return scores;
}

ClassifierScores parse_classifier_predictions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_classifier_predictions(in);
}

DetectorPredictions parse_detector_predictions(std::istream& in) {
  DetectorPredictions preds;
  for_each_json_line(in, [&](const json& obj, std::size_t) {
    const std::string id = string_field(obj, "image_id");
    std::vector<Detection>& list = preds.at(id);
    for (const json& d : array_field(obj, "detections")) {
      Detection det;
      det.rect = read_box(d);
      det.label = parse_detection_label(string_field(d, "label"));
      det.confidence = number_field(d, "confidence");
      check_unit_interval(det.confidence, Errc::kConfidenceOutOfRange, "confidence");
      check_detection_box(det.rect);
      list.push_back(det);
    }
  });
  return preds;
}

DetectorPredictions parse_detector_predictions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_detector_predictions(in);
}

void write_annotations(std::ostream& out, const GroundTruthSet& gt) {
  for (const ImageRecord& rec : gt.records()) {
    ordered_json obj;
    obj["image_id"] = rec.image_id;
    obj["study_id"] = rec.study_id;
    obj["width"] = rec.width;
    obj["height"] = rec.height;
    obj["boxes"] = ordered_json::array();
    for (const BoundingBox& b : rec.boxes) {
      ordered_json box;
      box["label"] = std::string(render_label(b.label));
      write_box(box, b.rect);
      obj["boxes"].push_back(std::move(box));
    }
    if (rec.age) obj["age"] = *rec.age;
    if (rec.sex) obj["sex"] = std::string(1, static_cast<char>(*rec.sex));
    out << obj.dump() << '\n';
  }
}

void write_classifier_predictions(std::ostream& out, const ClassifierScores& scores) {
  for (const auto& [id, score] : scores) {
    ordered_json obj;
    obj["image_id"] = id;
    obj["score"] = score;
    out << obj.dump() << '\n';
  }
}

void write_detector_predictions(std::ostream& out, const DetectorPredictions& preds) {
  for (const auto& entry : preds.entries()) {
    ordered_json obj;
    obj["image_id"] = entry.image_id;
    obj["detections"] = ordered_json::array();
    for (const Detection& d : entry.detections) {
      ordered_json det;
      det["label"] = std::string(render_label(d.label));
      det["confidence"] = d.confidence;
      write_box(det, d.rect);
      obj["detections"].push_back(std::move(det));
    }
    out << obj.dump() << '\n';
  }
}

namespace {

// Accumulates one statistics column from a stream of records.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(std::string name) { stats_.name = std::move(name); }

  void add(const ImageRecord& rec) {
    ++stats_.images;
    if (rec.abnormal()) {
      ++stats_.abnormal_images;
    } else {
      ++stats_.normal_images;
    }
    for (const BoundingBox& b : rec.boxes) {
      ++stats_.boxes;
      ++stats_.boxes_per_label[static_cast<std::size_t>(b.label)];
    }
    sum_width_ += rec.width;
    sum_height_ += rec.height;
    StudyInfo& study = studies_[rec.study_id];
    if (!study.age && rec.age) study.age = rec.age;
    if (!study.sex && rec.sex) study.sex = rec.sex;
  }

  SplitStats finish() && {
    stats_.studies = studies_.size();
    if (stats_.images > 0) {
      stats_.mean_width = sum_width_ / static_cast<double>(stats_.images);
      stats_.mean_height = sum_height_ / static_cast<double>(stats_.images);
    }
    double age_sum = 0.0;
    for (const auto& [id, s] : studies_) {
      if (s.age) {
        if (stats_.studies_with_age == 0) {
          stats_.min_age = stats_.max_age = *s.age;
        }
        ++stats_.studies_with_age;
        age_sum += *s.age;
        stats_.min_age = std::min(stats_.min_age, *s.age);
        stats_.max_age = std::max(stats_.max_age, *s.age);
      }
      if (s.sex) {
        ++stats_.studies_with_sex;
        if (*s.sex == Sex::kMale) {
          ++stats_.male_studies;
        } else {
          ++stats_.female_studies;
        }
      }
    }
    if (stats_.studies_with_age > 0) {
      stats_.mean_age = age_sum / static_cast<double>(stats_.studies_with_age);
    }
    return std::move(stats_);
  }

 private:
  struct StudyInfo {
    std::optional<int> age;
    std::optional<Sex> sex;
  };

  SplitStats stats_;
  double sum_width_ = 0.0;
  double sum_height_ = 0.0;
  std::map<std::string, StudyInfo> studies_;
};

}  // namespace

SplitStats compute_stats(const GroundTruthSet& gt, std::string name) {
  StatsAccumulator acc(std::move(name));
  for (const ImageRecord& rec : gt.records()) acc.add(rec);
  return std::move(acc).finish();
}

StatsReport compute_stats(
    const std::vector<std::pair<std::string, const GroundTruthSet*>>& sets) {
  StatsReport report;
  StatsAccumulator total("Total");
  for (const auto& [name, gt] : sets) {
    StatsAccumulator acc(name);
    for (const ImageRecord& rec : gt->records()) {
      acc.add(rec);
      total.add(rec);
    }
    report.splits.push_back(std::move(acc).finish());
  }
  report.total = std::move(total).finish();
  return report;
}

std::size_t SplitAssignment::count(Split which) const {
  return static_cast<std::size_t>(std::count_if(
      studies.begin(), studies.end(),
      [which](const auto& kv) { return kv.second == which; }));
}

std::string abnormality_stratum(const GroundTruthSet& gt,
                                const std::vector<std::string>& image_ids) {
  for (const std::string& id : image_ids) {
    if (gt.find(id)->abnormal()) return "abnormal";
  }
  return "normal";
}

std::string lesion_set_stratum(const GroundTruthSet& gt,
                               const std::vector<std::string>& image_ids) {
  std::set<std::size_t> present;
  for (const std::string& id : image_ids) {
    for (const BoundingBox& b : gt.find(id)->boxes) {
      present.insert(detection_index(remap_to_detection_label(b.label)));
    }
  }
  if (present.empty()) return "normal";
  std::string key;
  for (std::size_t idx : present) {
    if (!key.empty()) key += '+';
    key += label_code(kDetectionLabels[idx]);
  }
  return key;
}

SplitAssignment stratified_split(const GroundTruthSet& gt, double train_fraction,
                                 std::uint64_t seed, const StratumFn& stratum) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw Error(Errc::kInvalidFraction,
                "train fraction must be in (0, 1], got " + std::to_string(train_fraction));
  }
  if (gt.studies().empty()) throw Error(Errc::kEmptyDataset, "no studies to split");

  // studies() is ordered by study_id, so every stratum list comes out sorted.
  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& [study_id, images] : gt.studies()) {
    strata[stratum(gt, images)].push_back(study_id);
  }

  const std::size_t total = gt.studies().size();
  // The epsilon absorbs representation error such as 0.7 * 10 = 6.9999...
  const auto train_total = std::min<std::size_t>(
      total, static_cast<std::size_t>(std::floor(
                 static_cast<double>(total) * train_fraction + 1e-9)));

  struct Quota {
    std::size_t rank;
    std::size_t take;
    std::size_t remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  std::size_t rank = 0;
  for (const auto& [key, ids] : strata) {
    const std::size_t scaled = ids.size() * train_total;
    quotas.push_back({rank++, scaled / total, scaled % total});
    assigned += quotas.back().take;
  }
  std::vector<Quota*> by_remainder;
  for (Quota& q : quotas) by_remainder.push_back(&q);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [](const Quota* a, const Quota* b) { return a->remainder > b->remainder; });
  for (std::size_t i = 0; assigned < train_total; ++i, ++assigned) {
    ++by_remainder[i]->take;
  }

  SplitAssignment out;
  out.seed = seed;
  out.train_fraction = train_fraction;
  std::size_t s = 0;
  for (auto& [key, ids] : strata) {
    Rng rng(derive_seed(seed, s));
    for (std::size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[rng.below(i)]);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out.studies.emplace(ids[i], i < quotas[s].take ? Split::kTrain : Split::kTest);
    }
    ++s;
  }
  return out;
}

std::string_view render_split(Split which) {
  return which == Split::kTrain ? "train" : "test";
}

void write_split_csv(std::ostream& out, const SplitAssignment& split) {
  out << "study_id,split\n";
  for (const auto& [study, which] : split.studies) {
    out << study << ',' << render_split(which) << '\n';
  }
}

GroundTruthSet select_split(const GroundTruthSet& gt, const SplitAssignment& split,
                            Split which) {
  std::vector<ImageRecord> records;
  for (const ImageRecord& rec : gt.records()) {
    auto it = split.studies.find(rec.study_id);
    if (it != split.studies.end() && it->second == which) records.push_back(rec);
  }
  return GroundTruthSet(std::move(records));
}

}  // namespace spine_eval
