#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradstop/gradstop.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string auc_ties;
  std::string mode;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "seeds, comma separated")->delimiter(',');
  cmd->add_option("--out", o.out_dir, "output directory (default: $GRADSTOP_OUT_DIR or .)");
  cmd->add_option("--auc-ties", o.auc_ties, "strict or half")->check(CLI::IsMember({"strict", "half"}));
}

gradstop::RunConfig load(const Overrides& o) {
  gradstop::RunConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw gradstop::ConfigError("cannot open config '" + o.config_path + "'");
    try {
      cfg = gradstop::parse_config(in);
    } catch (const gradstop::ConfigError& e) {
      throw gradstop::ConfigError(o.config_path + ": " + e.what());
    }
  }
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.auc_ties.empty()) cfg.ties = gradstop::parse_auc_ties(o.auc_ties);
  if (!o.mode.empty()) cfg.modes = gradstop::parse_modes(o.mode);
  if (!o.out_dir.empty()) {
    cfg.out_dir = o.out_dir;
  } else if (cfg.out_dir.empty()) {
    if (const char* env = std::getenv("GRADSTOP_OUT_DIR"); env && *env) cfg.out_dir = env;
  }
  return cfg;
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

void print_presets() {
  std::cout << "profile   model  epochs  lr      k   t_cs   t_cb   t_d    w   r_down\n";
  for (const auto& p : gradstop::profiles()) {
    const auto& hp = p.hp;
    std::cout << std::left << std::setw(10) << p.name << std::setw(7) << gradstop::to_string(p.kind) << std::setw(8)
              << hp.epochs << std::setw(8) << hp.lr << std::setw(4) << hp.k << std::setw(7) << hp.t_cs << std::setw(7)
              << hp.t_cb << std::setw(7) << hp.t_d << std::setw(4) << hp.w << hp.r_down << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GradStop: label-free early stopping for unsupervised outlier detectors"};
  app.require_subcommand(1);

  Overrides run_opts, verify_opts;
  auto* run_cmd = app.add_subcommand("run", "train vanilla and/or GradStop runs and write telemetry");
  add_run_flags(run_cmd, run_opts);
  run_cmd->add_option("--mode", run_opts.mode, "vanilla, gradstop or both")
      ->check(CLI::IsMember({"vanilla", "gradstop", "both"}));

  auto* verify_cmd = app.add_subcommand("verify", "probe class-gradient dynamics on a labeled dataset");
  add_run_flags(verify_cmd, verify_opts);

  app.add_subcommand("presets", "list the built-in hyperparameter profiles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(gradstop::ErrorKind::Config);
  }

  try {
    if (*run_cmd) {
      const auto cfg = load(run_opts);
      const auto summary = gradstop::run(cfg);
      for (const auto& row : summary.rows) {
        std::cout << "seed " << row.seed << " " << gradstop::to_string(row.mode) << ": best_epoch " << row.best_epoch
                  << " stop_epoch " << row.stop_epoch << " (" << gradstop::to_string(row.stop_reason) << ")"
                  << " auc_best " << format_optional(row.auc_best) << " auc_final " << format_optional(row.auc_final)
                  << '\n';
      }
    } else if (*verify_cmd) {
      const auto cfg = load(verify_opts);
      const auto report = gradstop::verify(cfg);
      std::cout << "probes " << report.probes.size() << ", condition met " << report.n_condition_met
                << ", positive gap given condition " << report.n_gap_positive_given_condition << ", violations "
                << report.violations.size() << '\n';
    } else {
      print_presets();
    }
  } catch (const gradstop::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  }
  return 0;
}
