#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "gradstop/core.hpp"
#include "gradstop/data.hpp"
#include "gradstop/error.hpp"

namespace gradstop {

enum class ModelKind { AE, DSVDD };
enum class Activation { Tanh, Relu };

inline std::string to_string(ModelKind k) { return k == ModelKind::AE ? "ae" : "dsvdd"; }
inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "ae") return ModelKind::AE;
  if (s == "dsvdd") return ModelKind::DSVDD;
  throw ConfigError("unknown model kind '" + std::string(s) + "' (expected ae or dsvdd)");
}

inline Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + std::string(s) + "' (expected tanh or relu)");
}

/// Flattened per-sample gradient over all trainable parameters.
using GradientVector = Vec64;

/// Parameters of a one-hidden-layer scorer.
///
/// All trainable values live in `theta`, in this frozen order:
///
///   AE:    W_enc (h x d, row-major) | b_enc (h) | W_dec (d x h, row-major) | b_dec (d)
///   DSVDD: W_enc (h x d, row-major) | b_enc (h)
///
/// The DSVDD hypersphere center is kept apart in `center` and never trained.
struct ModelParams {
  ModelKind kind = ModelKind::AE;
  Activation activation = Activation::Tanh;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Vec64 theta;
  Vec64 center;

  static std::size_t trainable_count(ModelKind kind, std::size_t d, std::size_t h) {
    return kind == ModelKind::AE ? 2 * d * h + h + d : d * h + h;
  }
  std::size_t num_trainable() const { return trainable_count(kind, input_dim, hidden_dim); }

  std::size_t enc_weight_offset() const { return 0; }
  std::size_t enc_bias_offset() const { return hidden_dim * input_dim; }
  std::size_t dec_weight_offset() const { return enc_bias_offset() + hidden_dim; }
  std::size_t dec_bias_offset() const { return dec_weight_offset() + input_dim * hidden_dim; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct Checkpoint {
  std::size_t epoch = 0;
  ModelParams params;
};

namespace detail {

inline double activate(Activation a, double z) { return a == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0); }

inline double activate_grad(Activation a, double z, double activated) {
  return a == Activation::Tanh ? 1.0 - activated * activated : (z > 0.0 ? 1.0 : 0.0);
}

inline void check_input(const ModelParams& p, std::span<const double> x) {
  if (x.size() != p.input_dim) {
    throw ShapeError("input has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(p.input_dim));
  }
}

/// Hidden pre-activations and activations for one sample.
inline void encode(const ModelParams& p, std::span<const double> x, std::span<double> pre,
                   std::span<double> hidden) {
  const std::size_t d = p.input_dim;
  const double* w = p.theta.data() + p.enc_weight_offset();
  const double* b = p.theta.data() + p.enc_bias_offset();
  for (std::size_t j = 0; j < p.hidden_dim; ++j) {
    double z = b[j];
    const double* wj = w + j * d;
    for (std::size_t c = 0; c < d; ++c) z += wj[c] * x[c];
    pre[j] = z;
    hidden[j] = activate(p.activation, z);
  }
}

inline void decode(const ModelParams& p, std::span<const double> hidden, std::span<double> out) {
  const std::size_t h = p.hidden_dim;
  const double* w = p.theta.data() + p.dec_weight_offset();
  const double* b = p.theta.data() + p.dec_bias_offset();
  for (std::size_t c = 0; c < p.input_dim; ++c) {
    double v = b[c];
    const double* wc = w + c * h;
    for (std::size_t j = 0; j < h; ++j) v += wc[j] * hidden[j];
    out[c] = v;
  }
}

/// Adds scale * grad(loss at x) into `grad` and returns the loss.
inline double accumulate_sample(const ModelParams& p, std::span<const double> x, double scale,
                                std::span<double> grad) {
  const std::size_t d = p.input_dim;
  const std::size_t h = p.hidden_dim;
  Vec64 pre(h), hidden(h), dhidden(h, 0.0);
  encode(p, x, pre, hidden);

  double loss = 0.0;
  if (p.kind == ModelKind::AE) {
    Vec64 recon(d), resid(d);
    decode(p, hidden, recon);
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c) {
      const double e = recon[c] - x[c];
      loss += e * e;
      resid[c] = 2.0 * e * inv_d;
    }
    loss *= inv_d;
    if (scale != 0.0) {
      const double* w_dec = p.theta.data() + p.dec_weight_offset();
      double* g_w_dec = grad.data() + p.dec_weight_offset();
      double* g_b_dec = grad.data() + p.dec_bias_offset();
      for (std::size_t c = 0; c < d; ++c) {
        const double r = resid[c];
        g_b_dec[c] += scale * r;
        for (std::size_t j = 0; j < h; ++j) {
          g_w_dec[c * h + j] += scale * r * hidden[j];
          dhidden[j] += w_dec[c * h + j] * r;
        }
      }
    }
  } else {
    for (std::size_t j = 0; j < h; ++j) {
      const double e = hidden[j] - p.center[j];
      loss += e * e;
      dhidden[j] = 2.0 * e;
    }
  }

  if (scale != 0.0) {
    double* g_w_enc = grad.data() + p.enc_weight_offset();
    double* g_b_enc = grad.data() + p.enc_bias_offset();
    for (std::size_t j = 0; j < h; ++j) {
      const double dz = dhidden[j] * activate_grad(p.activation, pre[j], hidden[j]);
      if (dz == 0.0) continue;
      g_b_enc[j] += scale * dz;
      for (std::size_t c = 0; c < d; ++c) g_w_enc[j * d + c] += scale * dz * x[c];
    }
  }
  return loss;
}

}  // namespace detail

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
///
/// DSVDD needs `warmup`: the center is the mean embedding of those rows under
/// the initial weights, with coordinates of magnitude below 0.1 pushed out to
/// +-0.1 (sign kept, zero goes to +0.1).
inline ModelParams init_model(ModelKind kind, std::size_t d, std::size_t h, Rng& rng,
                              Activation activation = Activation::Tanh,
                              const Mat64* warmup = nullptr) {
  if (d < 1 || h < 1) throw ShapeError("init_model: d and h must be at least 1");
  ModelParams p;
  p.kind = kind;
  p.activation = activation;
  p.input_dim = d;
  p.hidden_dim = h;
  p.theta.assign(p.num_trainable(), 0.0);

  const double enc_bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < h * d; ++i) p.theta[p.enc_weight_offset() + i] = rng.uniform(-enc_bound, enc_bound);
  if (kind == ModelKind::AE) {
    const double dec_bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t i = 0; i < d * h; ++i) p.theta[p.dec_weight_offset() + i] = rng.uniform(-dec_bound, dec_bound);
    return p;
  }

  if (warmup == nullptr || warmup->rows() == 0) throw ShapeError("init_model: DSVDD needs a warm-up batch");
  if (warmup->cols() != d) throw ShapeError("init_model: warm-up batch has wrong feature count");
  p.center.assign(h, 0.0);
  Vec64 pre(h), hidden(h);
  for (std::size_t r = 0; r < warmup->rows(); ++r) {
    detail::encode(p, warmup->row(r), pre, hidden);
    for (std::size_t j = 0; j < h; ++j) p.center[j] += hidden[j];
  }
  for (auto& c : p.center) {
    c /= static_cast<double>(warmup->rows());
    if (std::abs(c) < 0.1) c = c < 0.0 ? -0.1 : 0.1;
  }
  return p;
}

/// AE: mean squared reconstruction error over the d coordinates.
/// DSVDD: squared distance of the embedding to the center.
inline double per_sample_loss(const ModelParams& p, std::span<const double> x) {
  detail::check_input(p, x);
  return detail::accumulate_sample(p, x, 0.0, {});
}

inline GradientVector per_sample_gradient(const ModelParams& p, std::span<const double> x) {
  detail::check_input(p, x);
  GradientVector g(p.num_trainable(), 0.0);
  detail::accumulate_sample(p, x, 1.0, g);
  return g;
}

/// Mean loss over the rows of `batch` and its exact gradient.
inline std::pair<double, GradientVector> batch_loss_and_gradient(const ModelParams& p, const Mat64& batch) {
  if (batch.rows() == 0) throw ShapeError("batch_loss_and_gradient: empty batch");
  if (batch.cols() != p.input_dim) throw ShapeError("batch_loss_and_gradient: feature count mismatch");
  GradientVector g(p.num_trainable(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.rows());
  double loss = 0.0;
  for (std::size_t r = 0; r < batch.rows(); ++r) loss += detail::accumulate_sample(p, batch.row(r), scale, g);
  return {loss * scale, std::move(g)};
}

/// theta <- theta - lr * g. The DSVDD center is untouched.
inline ModelParams gd_step(const ModelParams& p, std::span<const double> g, double lr) {
  if (g.size() != p.num_trainable()) {
    throw ShapeError("gd_step: gradient length " + std::to_string(g.size()) + " != " +
                     std::to_string(p.num_trainable()));
  }
  if (!(lr >= 0.0)) throw ShapeError("gd_step: learning rate must be non-negative");
  ModelParams next = p;
  axpy(-lr, g, next.theta);
  if (!all_finite(next.theta)) throw NumericError("gd_step produced non-finite parameters (learning rate too large?)");
  return next;
}

/// Per-row outlier scores; larger is more outlying.
inline Vec64 score_dataset(const ModelParams& p, const TrainingView& view) {
  const Mat64& x = view.features();
  if (x.cols() != p.input_dim) throw ShapeError("score_dataset: feature count mismatch");
  Vec64 scores(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) scores[r] = detail::accumulate_sample(p, x.row(r), 0.0, {});
  return scores;
}

// Checkpoint text format, version 1:
//
//   gradstop-checkpoint 1
//   kind <ae|dsvdd>
//   activation <tanh|relu>
//   input_dim <d>
//   hidden_dim <h>
//   epoch <t>
//   theta <count>
//   <one value per line, %.17g, canonical flattening order>
//   center <count>
//   <one value per line>

inline void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const ModelParams& p = ckpt.params;
  out << "gradstop-checkpoint 1\n"
      << "kind " << to_string(p.kind) << '\n'
      << "activation " << to_string(p.activation) << '\n'
      << "input_dim " << p.input_dim << '\n'
      << "hidden_dim " << p.hidden_dim << '\n'
      << "epoch " << ckpt.epoch << '\n';
  out << std::setprecision(17);
  out << "theta " << p.theta.size() << '\n';
  for (double v : p.theta) out << v << '\n';
  out << "center " << p.center.size() << '\n';
  for (double v : p.center) out << v << '\n';
}

inline Checkpoint read_checkpoint(std::istream& in) {
  auto expect = [&](std::string_view key) {
    std::string word;
    if (!(in >> word) || word != key) throw DataError("checkpoint: expected '" + std::string(key) + "'");
  };
  auto read_count = [&](std::string_view key) {
    expect(key);
    std::size_t v = 0;
    if (!(in >> v)) throw DataError("checkpoint: bad value for '" + std::string(key) + "'");
    return v;
  };
  auto read_values = [&](std::size_t count) {
    Vec64 values(count);
    for (auto& v : values) {
      if (!(in >> v)) throw DataError("checkpoint: truncated value list");
    }
    return values;
  };

  expect("gradstop-checkpoint");
  int version = 0;
  if (!(in >> version) || version != 1) throw DataError("checkpoint: unsupported version");
  Checkpoint ckpt;
  std::string word;
  expect("kind");
  in >> word;
  ckpt.params.kind = word == "ae" ? ModelKind::AE : word == "dsvdd" ? ModelKind::DSVDD
                                                                    : throw DataError("checkpoint: bad kind");
  expect("activation");
  in >> word;
  ckpt.params.activation = word == "tanh" ? Activation::Tanh : word == "relu" ? Activation::Relu
                                                                              : throw DataError("checkpoint: bad activation");
  ckpt.params.input_dim = read_count("input_dim");
  ckpt.params.hidden_dim = read_count("hidden_dim");
  ckpt.epoch = read_count("epoch");
  ckpt.params.theta = read_values(read_count("theta"));
  ckpt.params.center = read_values(read_count("center"));
  if (ckpt.params.theta.size() != ckpt.params.num_trainable()) throw DataError("checkpoint: theta length mismatch");
  const std::size_t expected_center = ckpt.params.kind == ModelKind::DSVDD ? ckpt.params.hidden_dim : 0;
  if (ckpt.params.center.size() != expected_center) throw DataError("checkpoint: center length mismatch");
  return ckpt;
}

}  // namespace gradstop
