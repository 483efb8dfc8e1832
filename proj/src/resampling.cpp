#include "spine_eval/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "spine_eval/error.hpp"
#include "spine_eval/parallel.hpp"
#include "spine_eval/random.hpp"

namespace spine_eval {

double interpolated_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(Errc::kEmptyData, "quantile of nothing");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BootstrapEstimate bootstrap_ci(const Metric& metric, const LabeledScores& data,
                               const BootstrapOptions& options) {
  if (data.empty()) throw Error(Errc::kEmptyData, "bootstrap over empty data");
  if (options.n_resamples == 0) {
    throw Error(Errc::kInvalidArgument, "need at least one resample");
  }
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw Error(Errc::kInvalidArgument, "alpha must be in (0, 1)");
  }
  const std::size_t n = data.size();

  // Members per cluster, clusters in order of first appearance.
  std::vector<std::vector<std::size_t>> clusters;
  if (!options.clusters.empty()) {
    if (options.clusters.size() != n) {
      throw Error(Errc::kInvalidArgument, "one cluster id per item required");
    }
    std::vector<std::size_t> slot(*std::max_element(options.clusters.begin(),
                                                    options.clusters.end()) + 1,
                                  SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t& s = slot[options.clusters[i]];
      if (s == SIZE_MAX) {
        s = clusters.size();
        clusters.emplace_back();
      }
      clusters[s].push_back(i);
    }
  }

  BootstrapEstimate est;
  est.point = metric(data);
  est.n_resamples = options.n_resamples;
  est.alpha = options.alpha;
  est.seed = options.seed;

  const auto labels = data.labels();
  const auto scores = data.scores();
  std::vector<std::optional<double>> values(options.n_resamples);
  parallel_for(options.n_resamples, options.threads, [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, r));
    std::vector<std::uint8_t> l;
    std::vector<double> s;
    l.reserve(n);
    s.reserve(n);
    if (clusters.empty()) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = rng.below(n);
        l.push_back(labels[i]);
        s.push_back(scores[i]);
      }
    } else {
      for (std::size_t k = 0; k < clusters.size(); ++k) {
        for (std::size_t i : clusters[rng.below(clusters.size())]) {
          l.push_back(labels[i]);
          s.push_back(scores[i]);
        }
      }
    }
    try {
      values[r] = metric(LabeledScores::unchecked(std::move(l), std::move(s)));
    } catch (const Error&) {
      values[r].reset();
    }
  });

  std::vector<double> defined;
  defined.reserve(values.size());
  for (const auto& v : values) {
    if (v && !std::isnan(*v)) defined.push_back(*v);
  }
  est.n_skipped = options.n_resamples - defined.size();
  if (defined.empty()) {
    throw Error(Errc::kAllResamplesDegenerate, "metric undefined on every resample");
  }
  std::sort(defined.begin(), defined.end());
  est.ci_low = interpolated_quantile(defined, options.alpha / 2.0);
  est.ci_high = interpolated_quantile(defined, 1.0 - options.alpha / 2.0);
  return est;
}

}  // namespace spine_eval
