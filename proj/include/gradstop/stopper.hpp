#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gradstop/core.hpp"
#include "gradstop/data.hpp"
#include "gradstop/dynamics.hpp"
#include "gradstop/error.hpp"
#include "gradstop/hyperparameters.hpp"
#include "gradstop/model.hpp"

namespace gradstop {

enum class StopDecision { Continue, Stop };
enum class StopReason { WindowExhausted, EpochsExhausted };

inline std::string to_string(StopReason r) {
  return r == StopReason::WindowExhausted ? "window_exhausted" : "epochs_exhausted";
}

/// Ratio used by the downtrend clause. A flat history (|H| < 1e-12) returns 0
/// so the clause cannot fire.
inline double downtrend_ratio(double h, double drop) {
  if (std::abs(h) < 1e-12) return 0.0;
  return drop / h;
}

/// Sliding-window GradStop controller. It only watches: it never touches the
/// parameters being trained, it just keeps copies of the ones it selects.
///
/// Observations arrive on metric epochs only, and the window `w` counts
/// observations. The best checkpoint starts as theta_0 at observation slot 0.
class GradStop {
 public:
  GradStop(Hyperparameters hp, Checkpoint theta0) : hp_(std::move(hp)), best_(std::move(theta0)) {}

  /// Feeds one metric epoch. `divergence` may be empty when the angle was undefined.
  StopDecision observe(std::size_t epoch, double c_delta, std::optional<double> divergence,
                       const Checkpoint& ckpt) {
    if (stopped_) throw ShapeError("GradStop::observe called after Stop");
    if (!epochs_.empty() ? epoch <= epochs_.back() : epoch <= best_.epoch) {
      throw ShapeError("GradStop::observe: epochs must be strictly increasing (got " + std::to_string(epoch) + ")");
    }
    const double previous = c_delta_.empty() ? 0.0 : c_delta_.back();
    epochs_.push_back(epoch);
    c_delta_.push_back(c_delta);
    divergence_.push_back(divergence);
    h_ += c_delta - previous;

    const std::size_t window_start = c_delta_.size() > hp_.w ? c_delta_.size() - hp_.w : 0;
    const double window_max = *std::max_element(c_delta_.begin() + static_cast<std::ptrdiff_t>(window_start), c_delta_.end());
    const bool beneficial = downtrend_ratio(h_, c_delta - window_max) > hp_.r_down || c_delta > hp_.t_cb ||
                            std::abs(c_delta) < hp_.t_cs;
    beneficial_.push_back(beneficial);

    if (beneficial) {
      best_ = ckpt;
      best_slot_ = c_delta_.size();
      h_ = 0.0;
      return StopDecision::Continue;
    }
    if (c_delta_.size() - best_slot_ >= hp_.w) {
      stopped_ = true;
      return StopDecision::Stop;
    }
    return StopDecision::Continue;
  }

  struct Selection {
    Checkpoint checkpoint;
    bool initial_divergence_rule = false;  // theta_0 chosen because early D exceeded t_d
  };

  /// Mean D over the first w observation slots (those with a defined angle);
  /// above t_d the run falls back to theta_0, otherwise the best checkpoint.
  Selection finalize(const Checkpoint& theta0) const {
    if (c_delta_.empty()) throw ShapeError("GradStop::finalize: no observations");
    if (auto mean = early_mean_divergence(); mean && *mean > hp_.t_d) return {theta0, true};
    return {best_, false};
  }

  std::optional<double> early_mean_divergence() const {
    const std::size_t slots = std::min(hp_.w, divergence_.size());
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < slots; ++i) {
      if (divergence_[i]) {
        sum += *divergence_[i];
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  }

  const std::vector<double>& c_delta_series() const noexcept { return c_delta_; }
  const std::vector<std::optional<double>>& divergence_series() const noexcept { return divergence_; }
  const std::vector<std::size_t>& observed_epochs() const noexcept { return epochs_; }
  const std::vector<bool>& beneficial_marks() const noexcept { return beneficial_; }
  double h() const noexcept { return h_; }
  std::size_t best_epoch() const noexcept { return best_.epoch; }
  const Checkpoint& best_checkpoint() const noexcept { return best_; }
  bool stopped() const noexcept { return stopped_; }
  const Hyperparameters& config() const noexcept { return hp_; }

 private:
  Hyperparameters hp_;
  Checkpoint best_;
  std::size_t best_slot_ = 0;
  double h_ = 0.0;
  bool stopped_ = false;
  std::vector<std::size_t> epochs_;
  std::vector<double> c_delta_;
  std::vector<std::optional<double>> divergence_;
  std::vector<bool> beneficial_;
};

enum class TrainMode { Vanilla, GradStop };

inline std::string to_string(TrainMode m) { return m == TrainMode::Vanilla ? "vanilla" : "gradstop"; }

struct ModelSpec {
  ModelKind kind = ModelKind::AE;
  Activation activation = Activation::Tanh;
};

struct RunResult {
  TrainMode mode = TrainMode::GradStop;
  Vec64 scores;                     // from the returned checkpoint
  std::vector<EpochRecord> telemetry;
  std::size_t best_epoch = 0;       // epoch of the returned checkpoint
  std::size_t stop_epoch = 0;       // last trained epoch
  StopReason stop_reason = StopReason::EpochsExhausted;
  bool initial_divergence_rule = false;
  Checkpoint selected;
  Checkpoint final_state;
  std::optional<double> auc_selected;
  std::optional<double> auc_final;
};

/// Metric epochs are multiples of the resample interval, plus the last epoch.
inline bool is_metric_epoch(std::size_t epoch, const Hyperparameters& hp) {
  return epoch % hp.resample_interval == 0 || epoch == hp.epochs;
}

namespace detail {

/// C_top, C_last and D for one metric epoch.
struct CohesionReading {
  double c_top = 0.0;
  double c_last = 0.0;
  std::optional<double> divergence;
};

inline CohesionReading read_cohesion(const ModelParams& p, const EvalBatch& batch, std::size_t k) {
  const auto sample = grad_sample(p, batch, k);
  CohesionReading r;
  r.c_top = cohesion(sample.top);
  r.c_last = cohesion(sample.last);
  const Vec64 top_sum = sample.top.sum();
  const Vec64 last_sum = sample.last.sum();
  if (norm(top_sum) > 0.0 && norm(last_sum) > 0.0) r.divergence = angle_between(top_sum, last_sum);
  return r;
}

}  // namespace detail

/// Full-batch gradient descent with GradStop observing every metric epoch.
///
/// Both modes share the exact same trajectory and random draws: theta_0 is
/// drawn first, then B_eval. Vanilla trains all epochs and returns the final
/// parameters; GradStop may break early and returns its selected checkpoint.
/// Labels, when present, are used for telemetry columns only.
inline RunResult train(const Dataset& ds, const Hyperparameters& hp, const ModelSpec& spec, Rng& rng,
                       TrainMode mode, AucTies ties = AucTies::Strict) {
  hp.validate();
  const TrainingView view = ds.training_view();
  const Mat64& x = view.features();
  const std::size_t n_eval = std::min(hp.n_eval, view.size());
  if (hp.k > n_eval / 2) {
    throw ConfigError("k = " + std::to_string(hp.k) + " too large for an evaluation batch of " + std::to_string(n_eval));
  }

  ModelParams params = init_model(spec.kind, view.dim(), hp.hidden_dim, rng, spec.activation, &x);
  const EvalBatch batch = sample_eval_batch(view, n_eval, rng);
  const Checkpoint theta0{0, params};
  GradStop stopper(hp, theta0);

  std::optional<EvaluationView> eval;
  if (ds.has_labels()) eval = ds.evaluation_view();

  RunResult result;
  result.mode = mode;
  std::size_t epoch = 0;
  for (epoch = 1; epoch <= hp.epochs; ++epoch) {
    auto [loss, grad] = batch_loss_and_gradient(params, x);
    params = gd_step(params, grad, hp.lr);
    if (!is_metric_epoch(epoch, hp)) continue;

    const auto reading = detail::read_cohesion(params, batch, hp.k);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.batch_loss = loss;
    rec.c_top = reading.c_top;
    rec.c_last = reading.c_last;
    rec.c_delta = reading.c_last - reading.c_top;
    rec.divergence = reading.divergence;
    if (eval) {
      rec.auc = auc(score_dataset(params, view), eval->labels(), ties);
      auto [in, out] = class_loss_means(params, *eval);
      rec.mean_inlier_loss = in;
      rec.mean_outlier_loss = out;
    }
    result.telemetry.push_back(rec);

    if (mode == TrainMode::GradStop &&
        stopper.observe(epoch, rec.c_delta, rec.divergence, Checkpoint{epoch, params}) == StopDecision::Stop) {
      result.stop_reason = StopReason::WindowExhausted;
      break;
    }
  }
  result.stop_epoch = std::min(epoch, hp.epochs);
  result.final_state = Checkpoint{result.stop_epoch, params};

  if (mode == TrainMode::GradStop) {
    auto selection = stopper.finalize(theta0);
    result.selected = std::move(selection.checkpoint);
    result.initial_divergence_rule = selection.initial_divergence_rule;
  } else {
    result.selected = result.final_state;
  }
  result.best_epoch = result.selected.epoch;
  result.scores = score_dataset(result.selected.params, view);
  if (eval) {
    result.auc_selected = auc(result.scores, eval->labels(), ties);
    result.auc_final = auc(score_dataset(result.final_state.params, view), eval->labels(), ties);
  }
  return result;
}

/// Train with GradStop and score the dataset with the returned checkpoint.
inline RunResult run_with_gradstop(const Dataset& ds, const Hyperparameters& hp, const ModelSpec& spec, Rng& rng,
                                   AucTies ties = AucTies::Strict) {
  return train(ds, hp, spec, rng, TrainMode::GradStop, ties);
}

inline RunResult run_vanilla(const Dataset& ds, const Hyperparameters& hp, const ModelSpec& spec, Rng& rng,
                             AucTies ties = AucTies::Strict) {
  return train(ds, hp, spec, rng, TrainMode::Vanilla, ties);
}

}  // namespace gradstop
