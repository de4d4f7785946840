#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradstop/config.hpp"
#include "gradstop/data.hpp"
#include "gradstop/dynamics.hpp"
#include "gradstop/error.hpp"
#include "gradstop/model.hpp"
#include "gradstop/stopper.hpp"
#include "gradstop/theory.hpp"

// Batch runner behind the command-line tool. Every file it writes, except
// timing.json, depends only on the config and the seeds.

namespace gradstop {

/// Builds the dataset for one seed: load or generate, downsample, standardize.
inline Dataset prepare_dataset(const DataSource& src, std::uint64_t seed) {
  Rng rng(src.data_seed.value_or(seed) ^ 0x5eedda7a5eedda7aULL);
  Dataset ds = src.kind == DataSourceKind::Csv ? load_csv(src.path, src.label_column)
                                               : gen_synthetic(src.synthetic, rng);
  if (ds.size() > src.max_rows) ds = downsample(ds, src.max_rows, rng);
  if (src.standardize) ds = standardize(ds);
  return ds;
}

struct RunRow {
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::GradStop;
  std::size_t best_epoch = 0;
  std::size_t stop_epoch = 0;
  StopReason stop_reason = StopReason::EpochsExhausted;
  bool initial_divergence_rule = false;
  std::optional<double> auc_best;   // AUC of the returned checkpoint
  std::optional<double> auc_final;  // AUC at the last trained epoch
  double wall_time_seconds = 0.0;
};

struct Aggregate {
  std::size_t runs = 0;
  std::optional<double> auc_best_mean, auc_best_std;
  std::optional<double> auc_final_mean, auc_final_std;
  double best_epoch_mean = 0.0;
  double stop_epoch_mean = 0.0;
};

struct RunSummary {
  std::string dataset;
  std::string model;
  std::vector<RunRow> rows;

  /// Mean and sample standard deviation (0 for a single run) over the rows of one mode.
  Aggregate aggregate(TrainMode mode) const {
    Aggregate a;
    std::vector<double> best, final_auc;
    for (const auto& r : rows) {
      if (r.mode != mode) continue;
      ++a.runs;
      a.best_epoch_mean += static_cast<double>(r.best_epoch);
      a.stop_epoch_mean += static_cast<double>(r.stop_epoch);
      if (r.auc_best) best.push_back(*r.auc_best);
      if (r.auc_final) final_auc.push_back(*r.auc_final);
    }
    if (a.runs == 0) return a;
    a.best_epoch_mean /= static_cast<double>(a.runs);
    a.stop_epoch_mean /= static_cast<double>(a.runs);
    auto stats = [](const std::vector<double>& v, std::optional<double>& mean, std::optional<double>& sd) {
      if (v.empty()) return;
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      mean = m;
      sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    stats(best, a.auc_best_mean, a.auc_best_std);
    stats(final_auc, a.auc_final_mean, a.auc_final_std);
    return a;
  }
};

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json finite_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p = dir.empty() ? std::filesystem::path(".") : std::filesystem::path(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory '" + p.string() + "': " + ec.message());
  return p;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const Hyperparameters& hp) {
  return {{"epochs", hp.epochs},
          {"lr", hp.lr},
          {"k", hp.k},
          {"t_cs", detail::finite_or_string(hp.t_cs)},
          {"t_cb", detail::finite_or_string(hp.t_cb)},
          {"t_d", detail::finite_or_string(hp.t_d)},
          {"w", hp.w},
          {"r_down", hp.r_down},
          {"n_eval", hp.n_eval},
          {"resample_interval", hp.resample_interval},
          {"hidden_dim", hp.hidden_dim}};
}

inline nlohmann::json to_json(const RunRow& r, const std::string& dataset, const std::string& model,
                              const Hyperparameters& hp) {
  return {{"dataset", dataset},
          {"model", model},
          {"seed", r.seed},
          {"mode", to_string(r.mode)},
          {"best_epoch", r.best_epoch},
          {"stop_epoch", r.stop_epoch},
          {"stop_reason", to_string(r.stop_reason)},
          {"initial_divergence_rule", r.initial_divergence_rule},
          {"auc_best", detail::optional_json(r.auc_best)},
          {"auc_final", detail::optional_json(r.auc_final)},
          {"hyperparameters", to_json(hp)}};
}

inline nlohmann::json to_json(const Aggregate& a) {
  return {{"runs", a.runs},
          {"auc_best_mean", detail::optional_json(a.auc_best_mean)},
          {"auc_best_std", detail::optional_json(a.auc_best_std)},
          {"auc_final_mean", detail::optional_json(a.auc_final_mean)},
          {"auc_final_std", detail::optional_json(a.auc_final_std)},
          {"best_epoch_mean", a.best_epoch_mean},
          {"stop_epoch_mean", a.stop_epoch_mean}};
}

inline std::string run_stem(const std::string& dataset, const std::string& model, std::uint64_t seed, TrainMode mode) {
  return dataset + "_" + model + "_seed" + std::to_string(seed) + "_" + to_string(mode);
}

inline void write_scores(std::ostream& out, std::span<const double> scores) {
  const auto old_precision = out.precision(17);
  for (double s : scores) out << s << '\n';
  out.precision(old_precision);
}

/// Trains every seed x mode pair and writes, into cfg.out_dir:
///   <stem>.telemetry.csv, <stem>.scores.txt, <stem>.checkpoint.txt, <stem>.summary.json
///   summary.json (all rows plus per-mode aggregates) and timing.json (wall times).
inline RunSummary run(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::ensure_dir(cfg.out_dir);
  const std::string model = to_string(cfg.model.kind);

  RunSummary summary;
  summary.model = model;
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const Dataset ds = prepare_dataset(cfg.data, seed);
    summary.dataset = ds.name();
    for (TrainMode mode : cfg.modes) {
      const auto start = std::chrono::steady_clock::now();
      Rng rng(seed);
      const RunResult result = train(ds, cfg.hp, cfg.model, rng, mode, cfg.ties);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

      RunRow row;
      row.seed = seed;
      row.mode = mode;
      row.best_epoch = result.best_epoch;
      row.stop_epoch = result.stop_epoch;
      row.stop_reason = result.stop_reason;
      row.initial_divergence_rule = result.initial_divergence_rule;
      row.auc_best = result.auc_selected;
      row.auc_final = result.auc_final;
      row.wall_time_seconds = elapsed.count();
      summary.rows.push_back(row);

      const std::string stem = run_stem(ds.name(), model, seed, mode);
      auto telemetry = detail::open_output(dir / (stem + ".telemetry.csv"));
      write_telemetry_csv(telemetry, result.telemetry);
      auto scores = detail::open_output(dir / (stem + ".scores.txt"));
      write_scores(scores, result.scores);
      auto ckpt = detail::open_output(dir / (stem + ".checkpoint.txt"));
      write_checkpoint(ckpt, result.selected);
      const auto row_json = to_json(row, ds.name(), model, cfg.hp);
      detail::open_output(dir / (stem + ".summary.json")) << row_json.dump(2) << '\n';
      rows.push_back(row_json);
      timing.push_back({{"seed", seed}, {"mode", to_string(mode)}, {"wall_time_seconds", row.wall_time_seconds}});
    }
  }

  nlohmann::json aggregates = nlohmann::json::object();
  for (TrainMode mode : cfg.modes) aggregates[to_string(mode)] = to_json(summary.aggregate(mode));
  const nlohmann::json doc = {{"dataset", summary.dataset},
                              {"model", model},
                              {"profile", cfg.profile},
                              {"hyperparameters", to_json(cfg.hp)},
                              {"runs", std::move(rows)},
                              {"aggregate", std::move(aggregates)}};
  detail::open_output(dir / "summary.json") << doc.dump(2) << '\n';
  detail::open_output(dir / "timing.json") << timing.dump(2) << '\n';
  return summary;
}

/// Probes the class-gradient dynamics on the vanilla trajectory at every
/// metric epoch of every seed. The probe step uses the summed loss, so its
/// step size is lr / n, which reproduces the training step exactly.
inline TheoremReport collect_probes(const RunConfig& cfg) {
  cfg.validate();
  std::vector<DynamicsProbe> probes;
  for (std::uint64_t seed : cfg.seeds) {
    const Dataset ds = prepare_dataset(cfg.data, seed);
    if (!ds.has_labels()) throw DataError("verify: labels are required for theory probes");
    const EvaluationView eval = ds.evaluation_view();
    const Mat64& x = ds.training_view().features();
    Rng rng(seed);
    ModelParams params = init_model(cfg.model.kind, ds.dim(), cfg.hp.hidden_dim, rng, cfg.model.activation, &x);
    const double probe_lr = cfg.hp.lr / static_cast<double>(ds.size());
    for (std::size_t epoch = 1; epoch <= cfg.hp.epochs; ++epoch) {
      auto [loss, grad] = batch_loss_and_gradient(params, x);
      params = gd_step(params, grad, cfg.hp.lr);
      if (!is_metric_epoch(epoch, cfg.hp)) continue;
      DynamicsProbe probe = probe_dynamics(params, eval, probe_lr, epoch);
      probe.seed = seed;
      probe.grad_in.clear();
      probe.grad_out.clear();
      probes.push_back(std::move(probe));
    }
  }
  return verify_theorem(std::move(probes));
}

/// Writes theorem_report.json and theorem_scatter.csv into cfg.out_dir.
inline TheoremReport verify(const RunConfig& cfg) {
  TheoremReport report = collect_probes(cfg);
  const auto dir = detail::ensure_dir(cfg.out_dir);
  detail::open_output(dir / "theorem_report.json") << to_json(report).dump(2) << '\n';
  auto scatter = detail::open_output(dir / "theorem_scatter.csv");
  write_scatter_csv(scatter, report);
  return report;
}

}  // namespace gradstop
