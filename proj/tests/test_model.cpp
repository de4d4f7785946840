#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gradstop/model.hpp"
#include "oracles.hpp"

using namespace gradstop;

namespace {

ModelParams random_params(ModelKind kind, Activation act, std::size_t d, std::size_t h, Rng& rng) {
  ModelParams p;
  p.kind = kind;
  p.activation = act;
  p.input_dim = d;
  p.hidden_dim = h;
  p.theta.resize(p.num_trainable());
  for (auto& v : p.theta) v = 0.7 * rng.normal();
  if (kind == ModelKind::DSVDD) {
    p.center.resize(h);
    for (auto& v : p.center) v = rng.uniform(-1.0, 1.0);
  }
  return p;
}

Vec64 random_input(std::size_t d, Rng& rng) {
  Vec64 x(d);
  for (auto& v : x) v = rng.normal();
  return x;
}

struct Case {
  ModelKind kind;
  Activation act;
};

const Case kCases[] = {{ModelKind::AE, Activation::Tanh},
                       {ModelKind::AE, Activation::Relu},
                       {ModelKind::DSVDD, Activation::Relu},
                       {ModelKind::DSVDD, Activation::Tanh}};

}  // namespace

TEST(PerSampleLoss, MatchesDuplicateForwardPass) {
  Rng rng(100);
  for (const auto& c : kCases) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_params(c.kind, c.act, 6, 5, rng);
      const auto x = random_input(6, rng);
      EXPECT_NEAR(per_sample_loss(p, x), static_cast<double>(oracle::loss(p, p.theta, x)), 1e-12);
    }
  }
}

TEST(PerSampleLoss, ZeroAutoencoderReturnsMeanSquare) {
  ModelParams p;
  p.input_dim = 2;
  p.hidden_dim = 3;
  p.theta.assign(p.num_trainable(), 0.0);
  EXPECT_DOUBLE_EQ(per_sample_loss(p, Vec64{2, 0}), 2.0);
}

TEST(PerSampleLoss, DsvddAtCenterIsZero) {
  Rng rng(101);
  auto p = random_params(ModelKind::DSVDD, Activation::Tanh, 4, 3, rng);
  const auto x = random_input(4, rng);
  for (std::size_t j = 0; j < 3; ++j) {
    double z = p.theta[p.enc_bias_offset() + j];
    for (std::size_t c = 0; c < 4; ++c) z += p.theta[j * 4 + c] * x[c];
    p.center[j] = std::tanh(z);
  }
  EXPECT_DOUBLE_EQ(per_sample_loss(p, x), 0.0);
}

TEST(PerSampleLoss, DimensionMismatchThrows) {
  Rng rng(102);
  const auto p = random_params(ModelKind::AE, Activation::Tanh, 3, 2, rng);
  EXPECT_THROW(per_sample_loss(p, Vec64{1, 2}), ShapeError);
  EXPECT_THROW(per_sample_gradient(p, Vec64{1, 2, 3, 4}), ShapeError);
}

TEST(PerSampleGradient, MatchesCentralDifferences) {
  Rng rng(103);
  for (const auto& c : kCases) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_params(c.kind, c.act, 5, 4, rng);
      const auto x = random_input(5, rng);
      const auto g = per_sample_gradient(p, x);
      ASSERT_EQ(g.size(), p.num_trainable());
      const auto fd = oracle::central_difference(p, [&](const Vec64& theta) { return oracle::loss(p, theta, x); });
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g[i]) <= 1e-8) continue;
        EXPECT_LE(oracle::relative_error(g[i], fd[i]), 1e-6)
            << to_string(c.kind) << "/" << to_string(c.act) << " trial " << trial << " coord " << i;
      }
    }
  }
}

TEST(PerSampleGradient, ZeroAtExactReconstruction) {
  ModelParams p;
  p.input_dim = 3;
  p.hidden_dim = 2;
  p.theta.assign(p.num_trainable(), 0.0);
  const Vec64 x{0.5, -1.5, 2.0};
  for (std::size_t c = 0; c < 3; ++c) p.theta[p.dec_bias_offset() + c] = x[c];
  EXPECT_EQ(per_sample_loss(p, x), 0.0);
  for (double v : per_sample_gradient(p, x)) EXPECT_EQ(v, 0.0);
}

TEST(ParameterCount, MatchesLayerShapes) {
  EXPECT_EQ(ModelParams::trainable_count(ModelKind::AE, 5, 3), 2u * 5 * 3 + 3 + 5);
  EXPECT_EQ(ModelParams::trainable_count(ModelKind::AE, 64, 64), 2u * 64 * 64 + 64 + 64);
  EXPECT_EQ(ModelParams::trainable_count(ModelKind::DSVDD, 5, 3), 5u * 3 + 3);
}

TEST(BatchGradient, MatchesCentralDifferencesOfBatchLoss) {
  Rng rng(104);
  for (const auto& c : kCases) {
    const auto p = random_params(c.kind, c.act, 4, 3, rng);
    Mat64 batch(7, 4);
    for (auto& v : batch.values()) v = rng.normal();
    const auto [loss, g] = batch_loss_and_gradient(p, batch);
    long double expected = 0.0L;
    for (std::size_t r = 0; r < batch.rows(); ++r) expected += oracle::loss(p, p.theta, batch.row(r));
    EXPECT_NEAR(loss, static_cast<double>(expected / 7.0L), 1e-12);
    const auto fd = oracle::central_difference(p, [&](const Vec64& theta) {
      long double total = 0.0L;
      for (std::size_t r = 0; r < batch.rows(); ++r) total += oracle::loss(p, theta, batch.row(r));
      return total / 7.0L;
    });
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g[i]) <= 1e-8) continue;
      EXPECT_LE(oracle::relative_error(g[i], fd[i]), 1e-6) << to_string(c.kind) << " coord " << i;
    }
  }
}

TEST(BatchGradient, EqualsMeanOfPerSampleGradients) {
  Rng rng(105);
  for (const auto& c : kCases) {
    const auto p = random_params(c.kind, c.act, 6, 4, rng);
    Mat64 batch(25, 6);
    for (auto& v : batch.values()) v = rng.normal();
    const auto [loss, g] = batch_loss_and_gradient(p, batch);
    Vec64 mean(g.size(), 0.0);
    for (std::size_t r = 0; r < batch.rows(); ++r) axpy(1.0 / 25.0, per_sample_gradient(p, batch.row(r)), mean);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], mean[i], 1e-12);
  }
}

TEST(BatchGradient, SingletonAndDuplicatedBatches) {
  Rng rng(106);
  const auto p = random_params(ModelKind::AE, Activation::Tanh, 3, 2, rng);
  const auto x = random_input(3, rng);
  const auto [l1, g1] = batch_loss_and_gradient(p, Mat64(1, 3, x));
  EXPECT_EQ(l1, per_sample_loss(p, x));
  EXPECT_EQ(g1, per_sample_gradient(p, x));
  Vec64 twice = x;
  twice.insert(twice.end(), x.begin(), x.end());
  const auto [l2, g2] = batch_loss_and_gradient(p, Mat64(2, 3, twice));
  EXPECT_DOUBLE_EQ(l2, l1);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_DOUBLE_EQ(g2[i], g1[i]);
  EXPECT_THROW(batch_loss_and_gradient(p, Mat64(0, 3)), ShapeError);
}

TEST(GdStep, ZeroRateIsIdentity) {
  Rng rng(107);
  const auto p = random_params(ModelKind::DSVDD, Activation::Relu, 3, 2, rng);
  const Vec64 g(p.num_trainable(), 1.0);
  EXPECT_EQ(gd_step(p, g, 0.0), p);
  EXPECT_THROW(gd_step(p, Vec64(3, 1.0), 0.1), ShapeError);
}

TEST(GdStep, QuadraticConvergesInOneHalfStep) {
  ModelParams p;
  p.kind = ModelKind::DSVDD;
  p.input_dim = 1;
  p.hidden_dim = 1;
  p.theta = {3.0, -2.0};
  p.center = {0.5};
  const Vec64 a{1.25, 4.0};
  Vec64 g(2);
  for (std::size_t i = 0; i < 2; ++i) g[i] = 2.0 * (p.theta[i] - a[i]);
  const auto next = gd_step(p, g, 0.5);
  EXPECT_EQ(next.theta, a);
  EXPECT_EQ(next.center, p.center);
}

TEST(GdStep, SmallStepDecreasesBatchLoss) {
  Rng rng(108);
  const auto p = random_params(ModelKind::AE, Activation::Tanh, 5, 4, rng);
  Mat64 batch(30, 5);
  for (auto& v : batch.values()) v = rng.normal();
  const auto [before, g] = batch_loss_and_gradient(p, batch);
  double lr = 1e-4;
  double after = batch_loss_and_gradient(gd_step(p, g, lr), batch).first;
  while (!(after < before) && lr > 1e-12) {
    lr *= 0.5;
    after = batch_loss_and_gradient(gd_step(p, g, lr), batch).first;
  }
  EXPECT_LT(after, before);
  EXPECT_EQ(lr, 1e-4);
}

TEST(GdStep, MonotoneDescentForFiftyEpochs) {
  Rng rng(109);
  for (const auto& c : kCases) {
    Mat64 x(60, 4);
    for (auto& v : x.values()) v = rng.normal();
    auto p = init_model(c.kind, 4, 8, rng, c.act, &x);
    double previous = batch_loss_and_gradient(p, x).first;
    for (int epoch = 0; epoch < 50; ++epoch) {
      const auto [loss, g] = batch_loss_and_gradient(p, x);
      p = gd_step(p, g, 0.005);
      const double now = batch_loss_and_gradient(p, x).first;
      EXPECT_LE(now, previous) << to_string(c.kind) << " epoch " << epoch;
      previous = now;
    }
  }
}

TEST(GdStep, DivergenceIsReported) {
  ModelParams p;
  p.input_dim = 1;
  p.hidden_dim = 1;
  p.theta = {1.0, 0.0, 1.0, 0.0};
  const Vec64 g(4, 1e300);
  EXPECT_THROW(gd_step(p, g, 1e10), NumericError);
}

TEST(InitModel, DeterministicAndBounded) {
  Rng a(1), b(1);
  const auto p = init_model(ModelKind::AE, 5, 3, a);
  const auto q = init_model(ModelKind::AE, 5, 3, b);
  EXPECT_EQ(p, q);
  EXPECT_EQ(p.theta.size(), 2u * 5 * 3 + 3 + 5);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_LE(std::abs(p.theta[i]), 1.0 / std::sqrt(5.0));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(p.theta[p.enc_bias_offset() + i], 0.0);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_LE(std::abs(p.theta[p.dec_weight_offset() + i]), 1.0 / std::sqrt(3.0));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(p.theta[p.dec_bias_offset() + i], 0.0);
  EXPECT_TRUE(p.center.empty());
  EXPECT_THROW(init_model(ModelKind::AE, 0, 3, a), ShapeError);
}

TEST(InitModel, DsvddCenterIsSnappedMeanEmbedding) {
  Rng rng(110);
  Mat64 warmup(40, 6);
  for (auto& v : warmup.values()) v = rng.normal();
  Rng init_rng(3);
  const auto p = init_model(ModelKind::DSVDD, 6, 10, init_rng, Activation::Relu, &warmup);
  ASSERT_EQ(p.center.size(), 10u);
  for (std::size_t j = 0; j < 10; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 40; ++r) {
      double z = 0.0;
      for (std::size_t c = 0; c < 6; ++c) z += p.theta[j * 6 + c] * warmup(r, c);
      mean += std::max(z, 0.0);
    }
    mean /= 40.0;
    const double expected = std::abs(mean) < 0.1 ? (mean < 0.0 ? -0.1 : 0.1) : mean;
    EXPECT_NEAR(p.center[j], expected, 1e-12);
    EXPECT_GE(std::abs(p.center[j]), 0.1);
  }
  Rng again(3);
  EXPECT_THROW(init_model(ModelKind::DSVDD, 6, 10, again), ShapeError);
}

TEST(InitModel, DsvddCenterExcludedFromUpdates) {
  Rng rng(111);
  Mat64 x(20, 3);
  for (auto& v : x.values()) v = rng.normal();
  auto p = init_model(ModelKind::DSVDD, 3, 4, rng, Activation::Relu, &x);
  const Vec64 center = p.center;
  EXPECT_EQ(per_sample_gradient(p, x.row(0)).size(), 3u * 4 + 4);
  for (int i = 0; i < 5; ++i) p = gd_step(p, batch_loss_and_gradient(p, x).second, 0.1);
  EXPECT_EQ(p.center, center);
}

TEST(ScoreDataset, PureAndPermutationEquivariant) {
  Rng rng(112);
  const auto p = random_params(ModelKind::AE, Activation::Tanh, 3, 4, rng);
  Mat64 x(10, 3);
  for (auto& v : x.values()) v = rng.normal();
  const Dataset ds(x, std::nullopt, "s");
  const Vec64 scores = score_dataset(p, ds.training_view());
  ASSERT_EQ(scores.size(), 10u);
  EXPECT_EQ(scores, score_dataset(p, ds.training_view()));
  for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(scores[r], per_sample_loss(p, x.row(r)));
  const auto order = rng.sample_without_replacement(10, 10);
  const Vec64 permuted = score_dataset(p, ds.subset(order).training_view());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(permuted[i], scores[order[i]]);
}

TEST(Checkpoint, TextRoundTripIsExact) {
  Rng rng(113);
  Mat64 x(10, 4);
  for (auto& v : x.values()) v = rng.normal();
  for (auto kind : {ModelKind::AE, ModelKind::DSVDD}) {
    const Checkpoint ckpt{37, init_model(kind, 4, 3, rng, Activation::Relu, &x)};
    std::stringstream buffer;
    write_checkpoint(buffer, ckpt);
    const Checkpoint back = read_checkpoint(buffer);
    EXPECT_EQ(back.epoch, 37u);
    EXPECT_EQ(back.params, ckpt.params);
  }
}

TEST(Checkpoint, MalformedInputIsRejected) {
  std::stringstream wrong_magic("model 1\n");
  EXPECT_THROW(read_checkpoint(wrong_magic), DataError);
  std::stringstream truncated(
      "gradstop-checkpoint 1\nkind ae\nactivation tanh\ninput_dim 1\nhidden_dim 1\nepoch 0\ntheta 4\n1\n2\n");
  EXPECT_THROW(read_checkpoint(truncated), DataError);
  std::stringstream wrong_len(
      "gradstop-checkpoint 1\nkind ae\nactivation tanh\ninput_dim 1\nhidden_dim 1\nepoch 0\ntheta 1\n1\ncenter 0\n");
  EXPECT_THROW(read_checkpoint(wrong_len), DataError);
}

TEST(Names, RoundTrip) {
  EXPECT_EQ(parse_model_kind("ae"), ModelKind::AE);
  EXPECT_EQ(parse_model_kind("dsvdd"), ModelKind::DSVDD);
  EXPECT_EQ(parse_activation("relu"), Activation::Relu);
  EXPECT_THROW(parse_model_kind("vae"), ConfigError);
  EXPECT_THROW(parse_activation("gelu"), ConfigError);
}
