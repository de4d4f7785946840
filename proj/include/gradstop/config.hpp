#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gradstop/data.hpp"
#include "gradstop/dynamics.hpp"
#include "gradstop/error.hpp"
#include "gradstop/hyperparameters.hpp"
#include "gradstop/stopper.hpp"

// Run configuration, read from an INI-style file:
//
//   [data]       source = synthetic | csv, path, label_column, standardize, max_rows
//   [synthetic]  scenario, n_inlier, n_outlier, dim, inlier_std, outlier_box,
//                outlier_distance, outlier_std, inlier_scale_lo, inlier_scale_hi, data_seed
//   [model]      profile = ae | dsvdd | rdp-like | vae-like, kind, activation, hidden_dim
//   [train]      epochs, lr, n_eval, resample_interval
//   [stopper]    k, t_cs, t_cb, t_d (a number or inf), w, r_down
//   [run]        seeds = 0,1,2   mode = vanilla | gradstop | both   out   auc_ties = strict | half
//
// The profile is applied first; any key set explicitly overrides it.

namespace gradstop {

enum class DataSourceKind { Csv, Synthetic };

struct DataSource {
  DataSourceKind kind = DataSourceKind::Synthetic;
  std::string path;
  std::optional<std::string> label_column;
  SyntheticConfig synthetic;
  std::optional<std::uint64_t> data_seed;  // synthetic data seed; defaults to the run seed
  bool standardize = true;
  std::size_t max_rows = 10000;
};

struct RunConfig {
  DataSource data;
  std::string profile = "ae";
  ModelSpec model;
  Hyperparameters hp;
  std::vector<std::uint64_t> seeds{0};
  std::vector<TrainMode> modes{TrainMode::Vanilla, TrainMode::GradStop};
  std::string out_dir;
  AucTies ties = AucTies::Strict;

  void validate() const {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (modes.empty()) throw ConfigError("at least one mode is required");
    if (data.kind == DataSourceKind::Csv && data.path.empty()) throw ConfigError("data.path is required for csv source");
    if (data.kind == DataSourceKind::Synthetic) data.synthetic.validate();
    if (data.max_rows < 2) throw ConfigError("data.max_rows must be at least 2");
    hp.validate();
  }
};

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.front() == '-') throw ConfigError("bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

inline std::vector<TrainMode> parse_modes(const std::string& text) {
  if (text == "vanilla") return {TrainMode::Vanilla};
  if (text == "gradstop") return {TrainMode::GradStop};
  if (text == "both") return {TrainMode::Vanilla, TrainMode::GradStop};
  throw ConfigError("unknown mode '" + text + "' (expected vanilla, gradstop or both)");
}

namespace detail {

class IniReader {
 public:
  explicit IniReader(const boost::property_tree::ptree& tree) : tree_(tree) {
    static const std::set<std::string> known = {
        "data.source", "data.path", "data.label_column", "data.standardize", "data.max_rows",
        "synthetic.scenario", "synthetic.n_inlier", "synthetic.n_outlier", "synthetic.dim",
        "synthetic.inlier_std", "synthetic.outlier_box", "synthetic.outlier_distance", "synthetic.outlier_std",
        "synthetic.inlier_scale_lo", "synthetic.inlier_scale_hi", "synthetic.data_seed",
        "model.profile", "model.kind", "model.activation", "model.hidden_dim",
        "train.epochs", "train.lr", "train.n_eval", "train.resample_interval",
        "stopper.k", "stopper.t_cs", "stopper.t_cb", "stopper.t_d", "stopper.w", "stopper.r_down",
        "run.seeds", "run.mode", "run.out", "run.auc_ties"};
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw ConfigError("key '" + section + "' must live inside a [section]");
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!known.count(full)) throw ConfigError("unknown config key '" + full + "'");
      }
    }
  }

  std::optional<std::string> text(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
  }

  void read(const std::string& key, std::string& out) const {
    if (auto v = text(key)) out = *v;
  }

  void read(const std::string& key, double& out) const {
    auto v = text(key);
    if (!v) return;
    if (*v == "inf" || *v == "+inf" || *v == "infinity") {
      out = kInf;
      return;
    }
    auto parsed = parse_double(*v);
    if (!parsed) throw ConfigError("config key '" + key + "': expected a number, got '" + *v + "'");
    out = *parsed;
  }

  void read(const std::string& key, std::size_t& out) const {
    auto v = text(key);
    if (!v) return;
    std::size_t used = 0;
    unsigned long long parsed = 0;
    try {
      parsed = std::stoull(*v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v->size() || v->front() == '-') {
      throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + *v + "'");
    }
    out = static_cast<std::size_t>(parsed);
  }

  void read(const std::string& key, bool& out) const {
    auto v = text(key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no") {
      out = false;
    } else {
      throw ConfigError("config key '" + key + "': expected true or false, got '" + *v + "'");
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
};

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  const detail::IniReader ini(tree);

  RunConfig cfg;
  ini.read("model.profile", cfg.profile);
  const Profile& profile = find_profile(cfg.profile);
  cfg.model.kind = profile.kind;
  cfg.model.activation = profile.activation;
  cfg.hp = profile.hp;

  if (auto kind = ini.text("model.kind")) {
    cfg.model.kind = parse_model_kind(*kind);
    if (!ini.text("model.activation")) {
      cfg.model.activation = cfg.model.kind == ModelKind::AE ? Activation::Tanh : Activation::Relu;
    }
  }
  if (auto act = ini.text("model.activation")) cfg.model.activation = parse_activation(*act);
  ini.read("model.hidden_dim", cfg.hp.hidden_dim);

  ini.read("train.epochs", cfg.hp.epochs);
  ini.read("train.lr", cfg.hp.lr);
  ini.read("train.n_eval", cfg.hp.n_eval);
  ini.read("train.resample_interval", cfg.hp.resample_interval);
  ini.read("stopper.k", cfg.hp.k);
  ini.read("stopper.t_cs", cfg.hp.t_cs);
  ini.read("stopper.t_cb", cfg.hp.t_cb);
  ini.read("stopper.t_d", cfg.hp.t_d);
  ini.read("stopper.w", cfg.hp.w);
  ini.read("stopper.r_down", cfg.hp.r_down);

  std::string source = "synthetic";
  ini.read("data.source", source);
  if (source == "csv") {
    cfg.data.kind = DataSourceKind::Csv;
  } else if (source != "synthetic") {
    throw ConfigError("data.source must be csv or synthetic, got '" + source + "'");
  }
  ini.read("data.path", cfg.data.path);
  if (auto label = ini.text("data.label_column"); label && !label->empty()) cfg.data.label_column = *label;
  ini.read("data.standardize", cfg.data.standardize);
  ini.read("data.max_rows", cfg.data.max_rows);

  auto& syn = cfg.data.synthetic;
  if (auto scenario = ini.text("synthetic.scenario")) syn.scenario = parse_scenario(*scenario);
  ini.read("synthetic.n_inlier", syn.n_inlier);
  ini.read("synthetic.n_outlier", syn.n_outlier);
  ini.read("synthetic.dim", syn.dim);
  ini.read("synthetic.inlier_std", syn.inlier_std);
  ini.read("synthetic.outlier_box", syn.outlier_box);
  ini.read("synthetic.outlier_distance", syn.outlier_distance);
  ini.read("synthetic.outlier_std", syn.outlier_std);
  ini.read("synthetic.inlier_scale_lo", syn.inlier_scale_lo);
  ini.read("synthetic.inlier_scale_hi", syn.inlier_scale_hi);
  if (ini.text("synthetic.data_seed")) {
    std::size_t seed = 0;
    ini.read("synthetic.data_seed", seed);
    cfg.data.data_seed = seed;
  }

  if (auto seeds = ini.text("run.seeds")) cfg.seeds = parse_seed_list(*seeds);
  if (auto mode = ini.text("run.mode")) cfg.modes = parse_modes(*mode);
  ini.read("run.out", cfg.out_dir);
  if (auto ties = ini.text("run.auc_ties")) cfg.ties = parse_auc_ties(*ties);
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace gradstop
