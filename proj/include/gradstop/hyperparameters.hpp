#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "gradstop/error.hpp"
#include "gradstop/model.hpp"

namespace gradstop {

/// Training and stopping knobs. Window `w` counts stopper observations, which
/// happen every `resample_interval` epochs, not raw epochs.
struct Hyperparameters {
  std::size_t epochs = 100;
  double lr = 0.005;
  std::size_t k = 20;
  double t_cs = 0.01;
  double t_cb = 0.05;
  double t_d = 1.57;  // radians; +inf disables the initial-divergence rule
  std::size_t w = 20;
  double r_down = 0.001;
  std::size_t n_eval = 400;
  std::size_t resample_interval = 10;
  std::size_t hidden_dim = 64;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a positive finite number");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (!(t_cs >= 0.0)) throw ConfigError("t_cs must be non-negative");
    if (!(t_cs < t_cb)) throw ConfigError("t_cs must be smaller than t_cb");
    if (!(t_d >= 0.0)) throw ConfigError("t_d must be non-negative (or inf)");
    if (w < 1) throw ConfigError("w must be at least 1");
    if (std::isnan(r_down)) throw ConfigError("r_down must be a number");
    if (n_eval < 2 * k) throw ConfigError("n_eval must be at least 2k");
    if (resample_interval < 1) throw ConfigError("resample_interval must be at least 1");
    if (hidden_dim < 1) throw ConfigError("hidden_dim must be at least 1");
  }
};

struct Profile {
  std::string_view name;
  ModelKind kind;
  Activation activation;
  Hyperparameters hp;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default profiles for the four reference models. Only AE and DSVDD are
/// implemented as scorers; the rdp-like and vae-like profiles drive the AE with
/// those models' stopper settings (notably t_d = inf).
inline const std::array<Profile, 4>& profiles() {
  static const std::array<Profile, 4> table = {{
      {"ae", ModelKind::AE, Activation::Tanh,
       {.epochs = 100, .lr = 0.005, .k = 20, .t_cs = 0.01, .t_cb = 0.05, .t_d = 1.57, .w = 20, .r_down = 0.001}},
      {"dsvdd", ModelKind::DSVDD, Activation::Relu,
       {.epochs = 100, .lr = 0.001, .k = 20, .t_cs = 0.0, .t_cb = 0.1, .t_d = 1.57, .w = 10, .r_down = 0.001}},
      {"rdp-like", ModelKind::AE, Activation::Tanh,
       {.epochs = 100, .lr = 0.5, .k = 20, .t_cs = 0.0, .t_cb = 0.5, .t_d = kInf, .w = 50, .r_down = 0.001}},
      {"vae-like", ModelKind::AE, Activation::Tanh,
       {.epochs = 100, .lr = 0.01, .k = 10, .t_cs = 0.01, .t_cb = 0.5, .t_d = kInf, .w = 20, .r_down = 0.001}},
  }};
  return table;
}

inline const Profile& find_profile(std::string_view name) {
  for (const auto& p : profiles()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected ae, dsvdd, rdp-like or vae-like)");
}

}  // namespace gradstop
