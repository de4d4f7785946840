#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "gradstop/core.hpp"
#include "gradstop/data.hpp"
#include "gradstop/error.hpp"
#include "gradstop/model.hpp"

namespace gradstop {

/// Gradient vectors with the B_eval row each one came from.
struct GradientSet {
  std::vector<GradientVector> vectors;
  std::vector<std::size_t> source_indices;

  std::size_t size() const noexcept { return vectors.size(); }
  Vec64 sum() const { return sum_vectors(vectors); }
};

struct GradSample {
  GradientSet top;   // k largest gradient norms
  GradientSet last;  // k smallest gradient norms
};

/// Indices of `values` in ascending order, equal values kept in index order.
inline std::vector<std::size_t> stable_argsort(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

/// Splits precomputed per-sample gradients into the top-k and last-k sets by
/// gradient norm. Requires 1 <= k <= n/2.
inline GradSample select_by_norm(std::vector<GradientVector> gradients, std::size_t k) {
  const std::size_t n = gradients.size();
  if (k < 1 || k > n / 2) {
    throw ShapeError("grad_sample: k = " + std::to_string(k) + " outside [1, " + std::to_string(n / 2) + "]");
  }
  Vec64 norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = norm(gradients[i]);
  const auto order = stable_argsort(norms);

  GradSample out;
  for (std::size_t r = 0; r < k; ++r) {
    out.last.source_indices.push_back(order[r]);
    out.last.vectors.push_back(std::move(gradients[order[r]]));
  }
  for (std::size_t r = n - k; r < n; ++r) {
    out.top.source_indices.push_back(order[r]);
    out.top.vectors.push_back(std::move(gradients[order[r]]));
  }
  return out;
}

/// Per-sample gradients on the evaluation batch, split into the k largest and
/// k smallest by Euclidean norm of the full flattened gradient.
inline GradSample grad_sample(const ModelParams& p, const EvalBatch& batch, std::size_t k) {
  const std::size_t n = batch.features.rows();
  if (k < 1 || k > n / 2) {
    throw ShapeError("grad_sample: k = " + std::to_string(k) + " outside [1, " + std::to_string(n / 2) + "]");
  }
  std::vector<GradientVector> gradients;
  gradients.reserve(n);
  for (std::size_t i = 0; i < n; ++i) gradients.push_back(per_sample_gradient(p, batch.features.row(i)));
  return select_by_norm(std::move(gradients), k);
}

/// ||sum g|| / sum ||g||, in [0, 1]. An all-zero set has cohesion 0.
inline double cohesion(std::span<const GradientVector> set) {
  if (set.empty()) throw ShapeError("cohesion: empty gradient set");
  double total = 0.0;
  for (const auto& g : set) total += norm(g);
  if (total == 0.0) return 0.0;
  return std::min(1.0, norm(sum_vectors(set)) / total);
}

inline double cohesion(const GradientSet& set) { return cohesion(set.vectors); }

/// Angle between the two set sums. Throws NumericError if either sum is zero.
inline double divergence(const GradientSet& a, const GradientSet& b) {
  if (a.vectors.empty() || b.vectors.empty()) throw ShapeError("divergence: empty gradient set");
  return angle_between(a.sum(), b.sum());
}

enum class AucTies {
  Strict,  // tied inlier/outlier pairs count 0
  Half,    // tied pairs count 1/2
};

inline AucTies parse_auc_ties(std::string_view s) {
  if (s == "strict") return AucTies::Strict;
  if (s == "half") return AucTies::Half;
  throw ConfigError("unknown AUC tie mode '" + std::string(s) + "' (expected strict or half)");
}

/// Fraction of (inlier, outlier) pairs where the inlier scores lower.
/// O(n log n) by sorting and sweeping tie groups.
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                  AucTies ties = AucTies::Strict) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  const auto order = stable_argsort(scores);
  std::uint64_t n_in = 0, n_out = 0;
  std::uint64_t strict_pairs = 0, tied_pairs = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t group_in = 0, group_out = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? group_out : group_in) += 1;
      ++j;
    }
    strict_pairs += group_out * n_in;
    tied_pairs += group_out * group_in;
    n_in += group_in;
    n_out += group_out;
    i = j;
  }
  if (n_in == 0 || n_out == 0) throw DataError("auc: need at least one inlier and one outlier");
  const double pairs = static_cast<double>(n_in) * static_cast<double>(n_out);
  if (ties == AucTies::Strict) return static_cast<double>(strict_pairs) / pairs;
  return static_cast<double>(2 * strict_pairs + tied_pairs) / (2.0 * pairs);
}

/// Mean per-sample loss of the inliers and of the outliers.
inline std::pair<double, double> class_loss_means(const ModelParams& p, const EvaluationView& view) {
  const auto labels = view.labels();
  double sum_in = 0.0, sum_out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t r = 0; r < view.size(); ++r) {
    const double loss = per_sample_loss(p, view.features().row(r));
    if (labels[r]) {
      sum_out += loss;
      ++n_out;
    } else {
      sum_in += loss;
      ++n_in;
    }
  }
  if (n_in == 0 || n_out == 0) throw DataError("class_loss_means: both classes must be present");
  return {sum_in / static_cast<double>(n_in), sum_out / static_cast<double>(n_out)};
}

/// One telemetry row. D is empty when a set sum vanished and the angle is undefined.
struct EpochRecord {
  std::size_t epoch = 0;
  double batch_loss = 0.0;
  double c_top = 0.0;
  double c_last = 0.0;
  double c_delta = 0.0;
  std::optional<double> divergence;
  std::optional<double> auc;
  std::optional<double> mean_inlier_loss;
  std::optional<double> mean_outlier_loss;
};

inline constexpr std::string_view kTelemetryHeader =
    "epoch,batch_loss,C_top,C_last,C_delta,D,auc,mean_inlier_loss,mean_outlier_loss";

inline void write_telemetry_csv(std::ostream& out, std::span<const EpochRecord> records) {
  const auto old_precision = out.precision(17);
  auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << *v;
  };
  out << kTelemetryHeader << '\n';
  for (const auto& r : records) {
    out << r.epoch << ',' << r.batch_loss << ',' << r.c_top << ',' << r.c_last << ',' << r.c_delta;
    cell(r.divergence);
    cell(r.auc);
    cell(r.mean_inlier_loss);
    cell(r.mean_outlier_loss);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace gradstop
