#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "lrnmt/optim.hpp"
#include "lrnmt/rng.hpp"
#include "lrnmt/train.hpp"

using namespace lrnmt;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.src_vocab = 10;
  c.tgt_vocab = 10;
  c.embed = 4;
  c.hidden = 6;
  return c;
}

// Zero params, zero gradients and fresh accumulators; tests poke single
// entries to get scalar updates.
struct Scalar {
  Seq2SeqParams params = zero_params(small_config());
  GradientSet grads = GradientSet::zeros_like(params);
  AdadeltaState state = AdadeltaState::zeros_like(params);
};

std::vector<IdPair> toy_corpus() {
  return {{{4, 5}, {6, 7}}, {{5, 6, 7}, {8}}, {{8, 9}, {9, 4, 5}}, {{4}, {4}}, {{9, 8, 7}, {5, 6}}};
}

}  // namespace

TEST(Clip, BoundaryIsNotExceeded) {
  Scalar s;
  s.grads.out_bias(0, 0) = 3.0;
  s.grads.out_bias(1, 0) = 4.0;
  const GradientSet out = clip_gradients(s.grads, 5.0);
  EXPECT_EQ(out.out_bias(0, 0), 3.0);
  EXPECT_EQ(out.out_bias(1, 0), 4.0);
}

TEST(Clip, ScalesDown) {
  Scalar s;
  s.grads.out_bias(0, 0) = 6.0;
  s.grads.out_bias(1, 0) = 8.0;
  GradientSet out = s.grads;
  EXPECT_DOUBLE_EQ(clip_gradients_in_place(out, 5.0), 10.0);
  EXPECT_DOUBLE_EQ(out.out_bias(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(out.out_bias(1, 0), 4.0);
}

TEST(Clip, RandomGradientsNeverGrow) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Scalar s;
    const double scale = rng.uniform(0.0, 3.0);
    s.grads.for_each([&](std::string_view, Matrix& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
    });
    long double pre = 0;
    s.grads.for_each([&](std::string_view, const Matrix& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) pre += static_cast<long double>(m.data()[i]) * m.data()[i];
    });
    GradientSet out = s.grads;
    clip_gradients_in_place(out, 5.0);
    const double post = global_norm(out);
    EXPECT_NEAR(post, std::min(static_cast<double>(std::sqrt(pre)), 5.0), 1e-10);
    if (std::sqrt(pre) <= 5.0) {
      EXPECT_TRUE(bitwise_equal(out, s.grads));
    }
  }
}

TEST(Clip, RejectsNonFinite) {
  Scalar s;
  s.grads.out_bias(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(clip_gradients(s.grads, 5.0), NonFiniteError);
}

TEST(Adadelta, FirstStepValue) {
  Scalar s;
  s.grads.out_bias(0, 0) = 1.0;
  adadelta_update(s.state, s.grads, s.params);
  EXPECT_NEAR(s.params.out_bias(0, 0), -4.4721e-3, 1e-7);
  EXPECT_NEAR(s.params.out_bias(0, 0), -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6), 1e-15);
}

TEST(Adadelta, TwoStepHandTrace) {
  Scalar s;
  const double rho = 0.95, eps = 1e-6;
  const double g1 = 1.0, g2 = -0.5;
  // Hand trace.
  long double eg = 0, edx = 0, x = 0;
  for (double g : {g1, g2}) {
    eg = rho * eg + (1 - rho) * g * g;
    const long double dx = -std::sqrt(edx + eps) / std::sqrt(eg + eps) * g;
    edx = rho * edx + (1 - rho) * dx * dx;
    x += dx;
  }
  for (double g : {g1, g2}) {
    s.grads.out_bias(0, 0) = g;
    adadelta_update(s.state, s.grads, s.params);
  }
  EXPECT_NEAR(s.params.out_bias(0, 0), static_cast<double>(x), 1e-12);
  EXPECT_NEAR(s.state.mean_sq_grad.out_bias(0, 0), static_cast<double>(eg), 1e-12);
  EXPECT_NEAR(s.state.mean_sq_update.out_bias(0, 0), static_cast<double>(edx), 1e-12);
}

TEST(Adadelta, ZeroGradientIsFixedPoint) {
  Scalar s;
  s.params = init_params(small_config(), 3);
  const Seq2SeqParams before = s.params;
  const AdadeltaState state_before = s.state;
  adadelta_update(s.state, s.grads, s.params);
  EXPECT_TRUE(bitwise_equal(s.params, before));
  EXPECT_TRUE(bitwise_equal(s.state.mean_sq_grad, state_before.mean_sq_grad));
  EXPECT_TRUE(bitwise_equal(s.state.mean_sq_update, state_before.mean_sq_update));
}

TEST(Adadelta, MovesAgainstGradientSign) {
  Rng rng(2);
  Scalar s;
  s.grads.for_each([&](std::string_view, Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  });
  adadelta_update(s.state, s.grads, s.params);
  std::vector<const Matrix*> g;
  s.grads.for_each([&](std::string_view, const Matrix& m) { g.push_back(&m); });
  std::size_t k = 0;
  s.params.for_each([&](std::string_view, const Matrix& m) {
    const Matrix& gm = *g[k++];
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (gm.data()[i] != 0.0) {
        EXPECT_EQ(std::signbit(m.data()[i]), !std::signbit(gm.data()[i]));
      }
  });
}

TEST(Adadelta, FrozenTensorsAndAccumulatorsUntouched) {
  Scalar s;
  s.grads.tgt_embed.setConstant(0.7);
  s.grads.out_bias.setConstant(0.7);
  adadelta_update(s.state, s.grads, s.params, FreezeMask::target_embeddings());
  EXPECT_TRUE((s.params.tgt_embed.array() == 0.0).all());
  EXPECT_TRUE((s.state.mean_sq_grad.tgt_embed.array() == 0.0).all());
  EXPECT_TRUE((s.state.mean_sq_update.tgt_embed.array() == 0.0).all());
  EXPECT_TRUE((s.params.out_bias.array() < 0.0).all());
}

TEST(EpochBudget, Values) {
  EXPECT_EQ(epoch_budget(false, 100), 100);
  EXPECT_EQ(epoch_budget(true, 100), 50);
  EXPECT_EQ(epoch_budget(true, 5), 3);
  EXPECT_EQ(epoch_budget(true, 1), 1);
  EXPECT_THROW(epoch_budget(true, 0), std::invalid_argument);
}

TEST(TrainConfig, DefaultsAndValidation) {
  TrainConfig c;
  EXPECT_EQ(c.minibatch_size, 32u);
  EXPECT_DOUBLE_EQ(c.dropout_rate, 0.2);
  EXPECT_DOUBLE_EQ(c.clip_norm, 5.0);
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.clip_norm = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainConfig, ParseWriteRoundTrip) {
  std::istringstream in("# comment\nminibatch_size = 4\ndropout_rate=0.1\nepochs = 7\nseed = 12\n"
                        "freeze_target_embeddings = true\nmax_steps = 3\n");
  const TrainConfig c = parse_train_config(in);
  EXPECT_EQ(c.minibatch_size, 4u);
  EXPECT_DOUBLE_EQ(c.dropout_rate, 0.1);
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_TRUE(c.freeze_target_embeddings);
  EXPECT_EQ(c.max_steps, 3u);
  std::stringstream out;
  write_train_config(out, c);
  const TrainConfig back = parse_train_config(out);
  EXPECT_EQ(back.minibatch_size, c.minibatch_size);
  EXPECT_EQ(back.dropout_rate, c.dropout_rate);
  EXPECT_EQ(back.max_steps, c.max_steps);
  EXPECT_EQ(back.freeze_target_embeddings, c.freeze_target_embeddings);

  std::istringstream bad("learning_rate = 1\n");
  EXPECT_THROW(parse_train_config(bad), std::invalid_argument);
  TrainConfig t;
  EXPECT_THROW(set_train_option(t, "epochs", "ten"), std::invalid_argument);
}

TEST(Train, ZeroStepsReturnsInputBitwise) {
  const Seq2SeqParams p = init_params(small_config(), 1);
  TrainConfig c = TrainConfig::with_epochs(3);
  c.max_steps = 0;
  const TrainResult r = train(p, toy_corpus(), c);
  EXPECT_TRUE(bitwise_equal(r.params, p));
  EXPECT_EQ(r.report.steps, 0u);
  EXPECT_EQ(r.report.best_epoch, 0);
}

TEST(Train, OneFullBatchStepMatchesManualUpdate) {
  // dropout 0, one batch holding the whole corpus: mean of per-pair
  // gradients, clipped, then one Adadelta step.
  const Seq2SeqParams p = init_params(small_config(), 2);
  const auto data = toy_corpus();
  TrainConfig c = TrainConfig::with_epochs(1);
  c.minibatch_size = data.size();
  c.dropout_rate = 0.0;
  c.clip_norm = 0.01;  // forces rescaling
  const TrainResult r = train(p, data, c);

  GradientSet g = GradientSet::zeros_like(p);
  for (const auto& pair : data) {
    const GradientSet gi = backward(p, forward_loss(p, pair).trace);
    std::vector<const Matrix*> src;
    gi.for_each([&](std::string_view, const Matrix& m) { src.push_back(&m); });
    std::size_t k = 0;
    g.for_each([&](std::string_view, Matrix& m) { m += *src[k++] / static_cast<double>(data.size()); });
  }
  const double norm = global_norm(g);
  ASSERT_GT(norm, 0.01);
  Seq2SeqParams expect = p;
  AdadeltaState st = AdadeltaState::zeros_like(p);
  g.for_each([&](std::string_view, Matrix& m) { m *= 0.01 / norm; });
  adadelta_update(st, g, expect);

  std::vector<const Matrix*> got;
  r.params.for_each([&](std::string_view, const Matrix& m) { got.push_back(&m); });
  std::size_t k = 0;
  expect.for_each([&](std::string_view name, const Matrix& m) {
    EXPECT_LT((m - *got[k++]).cwiseAbs().maxCoeff(), 1e-12) << name;
  });
  EXPECT_EQ(r.report.steps, 1u);
}

TEST(Train, ReproducibleUnderSeed) {
  const Seq2SeqParams p = init_params(small_config(), 3);
  TrainConfig c = TrainConfig::with_epochs(4);
  c.minibatch_size = 2;
  c.seed = 9;
  const TrainResult a = train(p, toy_corpus(), c);
  const TrainResult b = train(p, toy_corpus(), c);
  EXPECT_TRUE(bitwise_equal(a.params, b.params));
  EXPECT_EQ(a.report.epoch_loss, b.report.epoch_loss);
  c.seed = 10;
  EXPECT_FALSE(bitwise_equal(train(p, toy_corpus(), c).params, a.params));
}

TEST(Train, FreezeKeepsTargetEmbeddingsBitwise) {
  const Seq2SeqParams p = init_params(small_config(), 4);
  TrainConfig c = TrainConfig::with_epochs(5);
  c.minibatch_size = 2;
  c.freeze_target_embeddings = true;
  const TrainResult r = train(p, toy_corpus(), c);
  EXPECT_TRUE(bitwise_equal(r.params.tgt_embed, p.tgt_embed));
  EXPECT_FALSE(bitwise_equal(r.params.src_embed, p.src_embed));
  // Same through an explicit mask.
  c.freeze_target_embeddings = false;
  const TrainResult m = train(p, toy_corpus(), c, {}, FreezeMask::target_embeddings());
  EXPECT_TRUE(bitwise_equal(m.params, r.params));
}

TEST(Train, BestEpochPointsAtMaximumDevScore) {
  const Seq2SeqParams p = init_params(small_config(), 5);
  TrainConfig c = TrainConfig::with_epochs(6);
  c.minibatch_size = 5;
  const std::vector<double> script = {1.0, 3.0, 2.0, 3.0, 0.5, 2.5};
  std::size_t calls = 0;
  std::vector<Seq2SeqParams> seen;
  const DevScorer dev = [&](const Seq2SeqParams& params) {
    seen.push_back(params);
    return script[calls++];
  };
  const TrainResult r = train(p, toy_corpus(), c, dev);
  ASSERT_EQ(r.report.evals.size(), 6u);
  EXPECT_EQ(r.report.best_epoch, 2);  // tie with epoch 4 goes to the earlier one
  EXPECT_EQ(r.report.best_bleu(), 3.0);
  EXPECT_TRUE(bitwise_equal(r.params, seen[1]));
}

TEST(Train, EvalEveryStillScoresLastEpoch) {
  const Seq2SeqParams p = init_params(small_config(), 6);
  TrainConfig c = TrainConfig::with_epochs(5);
  c.minibatch_size = 5;
  c.eval_every = 2;
  const TrainResult r = train(p, toy_corpus(), c, [](const Seq2SeqParams&) { return 1.0; });
  std::vector<int> epochs;
  for (const auto& e : r.report.evals) epochs.push_back(e.epoch);
  EXPECT_EQ(epochs, (std::vector<int>{2, 4, 5}));
  std::ostringstream rows;
  r.report.write_rows(rows);
  EXPECT_NE(rows.str().find("1\t"), std::string::npos);
  EXPECT_NE(rows.str().find("\t-\n"), std::string::npos);
}

TEST(Train, NonFiniteLossNamesTheBatch) {
  Seq2SeqParams p = init_params(small_config(), 7);
  p.out_bias(6, 0) = std::numeric_limits<double>::infinity();
  TrainConfig c = TrainConfig::with_epochs(1);
  c.minibatch_size = 2;
  try {
    train(p, toy_corpus(), c);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
  }
}

TEST(Train, CorpusLossIsTokenWeighted) {
  const Seq2SeqParams p = init_params(small_config(), 8);
  const auto data = toy_corpus();
  double total = 0;
  std::size_t n = 0;
  for (const auto& d : data) {
    total += evaluate_loss(p, d) * static_cast<double>(d.target.size() + 1);
    n += d.target.size() + 1;
  }
  EXPECT_NEAR(corpus_loss(p, data), total / static_cast<double>(n), 1e-14);
}
