#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spine_eval/classification.hpp"

namespace spine_eval {

struct BootstrapEstimate {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_resamples = 0;
  std::size_t n_skipped = 0;  // resamples where the metric was undefined
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

struct BootstrapOptions {
  std::size_t n_resamples = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 = all cores; results do not depend on it
  // Optional resampling unit per item (e.g. study index). When set, whole
  // clusters are drawn with replacement instead of single items.
  std::vector<std::size_t> clusters;
};

using Metric = std::function<double(const LabeledScores&)>;

// Percentile bootstrap. Resample i draws from its own generator seeded by
// (seed, i). A metric that throws spine_eval::Error on a resample (e.g.
// single-class data) marks it skipped. The interval bounds are the
// alpha/2 and 1 - alpha/2 quantiles (linear interpolation between order
// statistics) of the defined resample values.
//
// Throws Error{kEmptyData} for empty data, Error{kInvalidArgument} for
// n_resamples == 0 or alpha outside (0,1), Error{kAllResamplesDegenerate}
// when no resample produced a value.
BootstrapEstimate bootstrap_ci(const Metric& metric, const LabeledScores& data,
                               const BootstrapOptions& options = {});

// Quantile of already sorted values, linear interpolation (numpy default).
double interpolated_quantile(std::span<const double> sorted, double p);

}  // namespace spine_eval
