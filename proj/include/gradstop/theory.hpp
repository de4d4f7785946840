#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradstop/core.hpp"
#include "gradstop/data.hpp"
#include "gradstop/dynamics.hpp"
#include "gradstop/error.hpp"
#include "gradstop/model.hpp"

// Empirical check of inlier priority under one gradient-descent step.
//
// Notation: f^i and f^o are the per-sample losses summed over the inliers and
// over the outliers; the step uses the gradient of their sum. r is the ratio of
// the class-gradient norms, theta the angle between them, R = |inliers| / |outliers|.
// The smoothness constant of the analysis is never estimated: what can be
// checked at a realized step is the implication "r above threshold => the
// per-sample loss of inliers dropped faster than that of outliers".

namespace gradstop {

/// Threshold on r above which the per-sample (mean) loss gap is guaranteed positive.
inline double threshold_mean_gap(double cos_theta, double ratio) {
  return cos_theta * ratio + std::sqrt(cos_theta * cos_theta * ratio * ratio + 2.0 * ratio + 1.0);
}

/// Threshold on r above which the summed loss gap is guaranteed positive.
inline double threshold_sum_gap(double cos_theta) {
  return std::sqrt(cos_theta * cos_theta + 3.0) + cos_theta;
}

struct DynamicsProbe {
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
  GradientVector grad_in;   // sum of inlier per-sample gradients
  GradientVector grad_out;  // sum of outlier per-sample gradients
  double norm_in = 0.0;
  double norm_out = 0.0;
  double r_t = 0.0;
  double theta_t = 0.0;
  double ratio = 0.0;       // |inliers| / |outliers|
  double delta_sum = 0.0;   // drop of f^i minus drop of f^o
  double delta_mean = 0.0;  // same, per sample of each class
  double lr_used = 0.0;
  bool assumption_held = false;  // both class losses did not increase at lr_used
  std::size_t n_in = 0;
  std::size_t n_out = 0;
};

namespace detail {

struct ClassSums {
  double loss_in = 0.0;
  double loss_out = 0.0;
  GradientVector grad_in;
  GradientVector grad_out;
  std::size_t n_in = 0;
  std::size_t n_out = 0;
};

inline ClassSums class_sums(const ModelParams& p, const EvaluationView& view, bool with_gradients) {
  ClassSums s;
  if (with_gradients) {
    s.grad_in.assign(p.num_trainable(), 0.0);
    s.grad_out.assign(p.num_trainable(), 0.0);
  }
  const auto labels = view.labels();
  const double scale = with_gradients ? 1.0 : 0.0;
  for (std::size_t r = 0; r < view.size(); ++r) {
    const bool outlier = labels[r] != 0;
    auto& grad = outlier ? s.grad_out : s.grad_in;
    const double loss = accumulate_sample(p, view.features().row(r), scale, grad);
    (outlier ? s.loss_out : s.loss_in) += loss;
    ++(outlier ? s.n_out : s.n_in);
  }
  return s;
}

}  // namespace detail

inline constexpr int kMaxLrHalvings = 40;

/// Class-gradient statistics at `p` and the measured loss gaps across one
/// gradient step on the summed loss. The step size starts at `lr` and is
/// halved (up to 40 times) until neither class loss increases; if none does,
/// `assumption_held` stays false.
inline DynamicsProbe probe_dynamics(const ModelParams& p, const EvaluationView& view, double lr,
                                    std::size_t epoch = 0) {
  if (!(lr > 0.0)) throw ShapeError("probe_dynamics: lr must be positive");
  const auto before = detail::class_sums(p, view, true);
  if (before.n_in == 0 || before.n_out == 0) throw DataError("probe_dynamics: both classes must be present");

  DynamicsProbe probe;
  probe.epoch = epoch;
  probe.n_in = before.n_in;
  probe.n_out = before.n_out;
  probe.norm_in = norm(before.grad_in);
  probe.norm_out = norm(before.grad_out);
  if (probe.norm_in == 0.0 || probe.norm_out == 0.0) throw NumericError("probe_dynamics: a class gradient vanished");
  probe.r_t = probe.norm_in / probe.norm_out;
  probe.theta_t = angle_between(before.grad_in, before.grad_out);
  probe.ratio = static_cast<double>(before.n_in) / static_cast<double>(before.n_out);

  GradientVector full = before.grad_in;
  axpy(1.0, before.grad_out, full);
  probe.grad_in = before.grad_in;
  probe.grad_out = before.grad_out;

  double step = lr;
  for (int attempt = 0; attempt <= kMaxLrHalvings; ++attempt, step *= 0.5) {
    ModelParams next = p;
    axpy(-step, full, next.theta);
    if (!all_finite(next.theta)) continue;
    const auto after = detail::class_sums(next, view, false);
    const double drop_in = before.loss_in - after.loss_in;
    const double drop_out = before.loss_out - after.loss_out;
    if (attempt == 0 || (drop_in >= 0.0 && drop_out >= 0.0)) {
      probe.lr_used = step;
      probe.delta_sum = drop_in - drop_out;
      probe.delta_mean = drop_in / static_cast<double>(before.n_in) - drop_out / static_cast<double>(before.n_out);
    }
    if (drop_in >= 0.0 && drop_out >= 0.0) {
      probe.assumption_held = true;
      return probe;
    }
  }
  // Along this direction one class loss rises at every step size tried; the
  // gaps reported are those at the initial step and the probe is not counted.
  return probe;
}

inline bool condition_met(const DynamicsProbe& probe) {
  return probe.assumption_held && probe.r_t > threshold_mean_gap(std::cos(probe.theta_t), probe.ratio);
}

struct TheoremReport {
  std::vector<DynamicsProbe> probes;
  std::size_t n_condition_met = 0;
  std::size_t n_gap_positive_given_condition = 0;
  std::vector<std::size_t> violations;  // probe indices with the condition met but no positive gap
};

/// Tallies the sufficiency claim: wherever the condition holds, the mean gap
/// must be positive. Probes below the threshold say nothing either way.
inline TheoremReport verify_theorem(std::vector<DynamicsProbe> probes) {
  TheoremReport report;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!condition_met(probes[i])) continue;
    ++report.n_condition_met;
    if (probes[i].delta_mean > 0.0) {
      ++report.n_gap_positive_given_condition;
    } else {
      report.violations.push_back(i);
    }
  }
  report.probes = std::move(probes);
  return report;
}

/// Pieces of the decomposition
///   log r = log C_in - log C_out + log(sum_norm_in / sum_norm_out),
/// which is exact because ||sum g|| = C * sum ||g|| for each set.
struct CohesionBridge {
  double c_in = 0.0;
  double c_out = 0.0;
  double sum_norm_in = 0.0;
  double sum_norm_out = 0.0;

  double log_r() const { return std::log(c_in) - std::log(c_out) + std::log(sum_norm_in / sum_norm_out); }
};

inline CohesionBridge cohesion_bridge(std::span<const GradientVector> in, std::span<const GradientVector> out) {
  if (in.empty() || out.empty()) throw ShapeError("cohesion_bridge: empty gradient set");
  CohesionBridge b;
  for (const auto& g : in) b.sum_norm_in += norm(g);
  for (const auto& g : out) b.sum_norm_out += norm(g);
  if (b.sum_norm_in == 0.0 || b.sum_norm_out == 0.0) throw NumericError("cohesion_bridge: zero total norm");
  b.c_in = cohesion(in);
  b.c_out = cohesion(out);
  if (b.c_in == 0.0 || b.c_out == 0.0) throw NumericError("cohesion_bridge: a set sums to the zero vector");
  return b;
}

inline nlohmann::json to_json(const DynamicsProbe& p) {
  return {{"epoch", p.epoch},
          {"seed", p.seed},
          {"norm_in", p.norm_in},
          {"norm_out", p.norm_out},
          {"r_t", p.r_t},
          {"theta_t", p.theta_t},
          {"R", p.ratio},
          {"threshold", threshold_mean_gap(std::cos(p.theta_t), p.ratio)},
          {"delta_sum", p.delta_sum},
          {"delta_mean", p.delta_mean},
          {"lr_used", p.lr_used},
          {"assumption_held", p.assumption_held},
          {"condition_met", condition_met(p)}};
}

inline nlohmann::json to_json(const TheoremReport& r) {
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : r.probes) probes.push_back(to_json(p));
  return {{"n_probes", r.probes.size()},
          {"n_condition_met", r.n_condition_met},
          {"n_gap_positive_given_condition", r.n_gap_positive_given_condition},
          {"violations", r.violations},
          {"probes", std::move(probes)}};
}

inline void write_scatter_csv(std::ostream& out, const TheoremReport& r) {
  const auto old_precision = out.precision(17);
  out << "r_t,threshold,theta_t,R,delta_mean,condition_met\n";
  for (const auto& p : r.probes) {
    out << p.r_t << ',' << threshold_mean_gap(std::cos(p.theta_t), p.ratio) << ',' << p.theta_t << ',' << p.ratio
        << ',' << p.delta_mean << ',' << (condition_met(p) ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace gradstop
