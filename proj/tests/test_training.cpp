#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>

#include "actmod/checkpoint.hpp"
#include "actmod/errors.hpp"
#include "actmod/synth.hpp"
#include "actmod/training.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace actmod;
using fixtures::gaussian;

namespace {

std::vector<VideoSample> labelled(const std::vector<std::size_t>& actions,
                                  std::size_t adverbs = 2) {
  std::vector<VideoSample> out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    VideoSample s;
    s.features = Matrix(2, 2, double(i));
    s.padded = {false, false};
    s.action = actions[i];
    s.adverb = i % adverbs;
    s.video_id = "s" + std::to_string(i);
    out.push_back(s);
  }
  return out;
}

struct SmallRun {
  Dataset ds;
  std::vector<VideoSample> samples;
  ModelConfig model;
};

SmallRun small_run(std::uint64_t seed, std::size_t videos = 80) {
  SynthConfig sc;
  sc.seed = seed;
  sc.train_videos = videos;
  sc.test_videos = 10;
  sc.embed_dim = 16;
  sc.feature_dim = 8;
  SmallRun r{synth_generate(sc).dataset, {}, {}};
  r.samples = make_samples(r.ds, r.ds.split("train"), sc.window);
  r.model.embed_dim = 16;
  r.model.head_dim = 4;
  r.model.heads = 4;
  r.model.feature_dim = 8;
  r.model.window = sc.window;
  return r;
}

TrainConfig quick(std::size_t epochs, std::size_t stage1) {
  TrainConfig c;
  c.epochs = epochs;
  c.stage1_epochs = stage1;
  c.batch_size = 32;
  c.lr = 1e-3;
  c.modifier_lr = 1e-4;
  return c;
}

std::vector<Matrix> modifier_values(const ModelParams& p) {
  std::vector<Matrix> out;
  for (const Parameter* q : p.parameters())
    if (q->group == ParamGroup::modifier) out.push_back(q->value);
  return out;
}

}  // namespace

TEST(SampleBatch, TwoActionsAlwaysNegateEachOther) {
  const auto samples = labelled({0, 1, 1, 0, 1});
  Rng rng(1);
  for (int b = 0; b < 50; ++b)
    for (const auto& item : sample_batch(samples, 2, 2, rng, 8))
      EXPECT_EQ(item.negative_action, 1 - samples[item.sample].action);
}

TEST(SampleBatch, DeterministicForSeed) {
  const auto samples = labelled({0, 1, 2, 3, 4, 2});
  Rng a(42), b(42);
  for (int i = 0; i < 20; ++i) {
    const auto x = sample_batch(samples, 5, 2, a, 7, LossMode::single);
    const auto y = sample_batch(samples, 5, 2, b, 7, LossMode::single);
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      EXPECT_EQ(x[k].sample, y[k].sample);
      EXPECT_EQ(x[k].negative_action, y[k].negative_action);
      EXPECT_EQ(x[k].negative_adverb, y[k].negative_adverb);
      EXPECT_EQ(x[k].negative_kind, y[k].negative_kind);
    }
  }
}

TEST(SampleBatch, NegativeDistributionUniformCountingOracle) {
  // Five equally frequent actions; 100 batches of 1000 give 1e5 negatives.
  std::vector<std::size_t> acts;
  for (std::size_t i = 0; i < 500; ++i) acts.push_back(i % 5);
  const auto samples = labelled(acts);
  Rng rng(7);
  std::array<std::size_t, 5> neg{};
  std::array<std::array<std::size_t, 5>, 5> joint{};
  for (int b = 0; b < 100; ++b)
    for (const auto& item : sample_batch(samples, 5, 2, rng, 1000)) {
      const std::size_t a = samples[item.sample].action;
      ASSERT_NE(item.negative_action, a);
      ++neg[item.negative_action];
      ++joint[a][item.negative_action];
    }
  for (std::size_t a = 0; a < 5; ++a) {
    EXPECT_NEAR(double(neg[a]) / 1e5, 0.2, 0.2 * 0.03) << a;
    std::size_t row = 0;
    for (std::size_t n = 0; n < 5; ++n) row += joint[a][n];
    for (std::size_t n = 0; n < 5; ++n)
      if (n != a) {
        EXPECT_NEAR(double(joint[a][n]) / row, 0.25, 0.25 * 0.03);
      }
  }
}

TEST(SampleBatch, Errors) {
  Rng rng(1);
  EXPECT_THROW(sample_batch({}, 3, 2, rng, 4), ContractError);
  EXPECT_THROW(sample_batch(labelled({0, 0}), 1, 2, rng, 4), ContractError);
}

TEST(SampleBatch, SingleActionBatchFallsBackToVocabulary) {
  const auto samples = labelled({2, 2, 2});
  Rng rng(3);
  std::set<std::size_t> seen;
  for (int b = 0; b < 100; ++b)
    for (const auto& item : sample_batch(samples, 4, 2, rng, 3)) {
      EXPECT_NE(item.negative_action, 2u);
      seen.insert(item.negative_action);
    }
  EXPECT_EQ(seen, (std::set<std::size_t>{0, 1, 3}));
}

TEST(SampleBatch, AdverbNegativesDifferFromLabel) {
  const auto samples = labelled({0, 1, 2, 3}, 4);
  Rng rng(5);
  std::set<int> kinds;
  for (int b = 0; b < 100; ++b)
    for (const auto& item : sample_batch(samples, 4, 4, rng, 4, LossMode::single)) {
      EXPECT_NE(item.negative_adverb, samples[item.sample].adverb);
      EXPECT_LE(item.negative_kind, 2);
      kinds.insert(item.negative_kind);
    }
  EXPECT_EQ(kinds.size(), 3u);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.stage1_epochs = c.epochs + 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.modifier_lr = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Training, StageOneLeavesModifiersBitIdentical) {
  for (ModifierKind mk : {ModifierKind::learned_translation, ModifierKind::linear,
                          ModifierKind::nonlinear}) {
    auto run = small_run(3);
    run.model.modifier = mk;
    const TrainConfig cfg = quick(2, 2);
    TrainState st =
        init_train_state(cfg, run.model, run.ds.actions, run.ds.adverbs);
    const auto before = modifier_values(st.params);
    const Matrix table = st.params.action_table.value;
    Trainer(cfg, run.samples).train(st);
    EXPECT_EQ(modifier_values(st.params), before) << to_string(mk);
    EXPECT_FALSE(st.params.action_table.value == table);
    for (const auto& e : st.log.epochs) EXPECT_EQ(e.stage, Stage::actions_only);
  }
}

TEST(Training, AllStageOneKeepsIdentityModifiers) {
  auto run = small_run(4);
  const TrainConfig cfg = quick(3, 3);
  const TrainState st = train(cfg, run.model, run.ds.actions, run.ds.adverbs,
                              run.samples);
  for (const auto& w : st.params.modifier)
    EXPECT_EQ(w.value, Matrix::identity(16));
}

TEST(Training, FirstJointBatchAdverbLossIsMargin) {
  auto run = small_run(5);
  const TrainConfig cfg = quick(1, 0);
  TrainState st = init_train_state(cfg, run.model, run.ds.actions, run.ds.adverbs);
  const Trainer trainer(cfg, run.samples);
  const auto batch = sample_batch(run.samples, 10, 6, st.rng, 32);
  const BatchLoss l = trainer.step(st, batch, Stage::joint);
  EXPECT_EQ(l.adverb, run.model.margin);
}

TEST(Training, LearningRateRouting) {
  auto run = small_run(6);
  TrainConfig cfg = quick(1, 0);
  cfg.lr = 1e-2;
  cfg.modifier_lr = 1e-5;
  TrainState st = init_train_state(cfg, run.model, run.ds.actions, run.ds.adverbs);
  const auto batch = sample_batch(run.samples, 10, 6, st.rng, 32);
  std::map<std::string, Matrix> before;
  for (const Parameter* p : st.params.parameters()) before[p->name] = p->value;
  Trainer(cfg, run.samples).step(st, batch, Stage::joint);
  double mod_max = 0.0, other_max = 0.0;
  for (const Parameter* p : st.params.parameters()) {
    const Matrix& b = before[p->name];
    double m = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
      m = std::max(m, std::abs(p->value.values()[i] - b.values()[i]));
    if (p->group == ParamGroup::modifier) {
      EXPECT_LE(m, cfg.modifier_lr * (1 + 1e-9)) << p->name;
      mod_max = std::max(mod_max, m);
    } else {
      EXPECT_LE(m, cfg.lr * (1 + 1e-9)) << p->name;
      other_max = std::max(other_max, m);
    }
  }
  EXPECT_GT(mod_max, 0.5 * cfg.modifier_lr);
  EXPECT_GT(other_max, 0.5 * cfg.lr);
}

TEST(Training, SameSeedIdenticalCheckpoints) {
  auto run = small_run(7);
  const TrainConfig cfg = quick(3, 1);
  const auto a = train(cfg, run.model, run.ds.actions, run.ds.adverbs, run.samples);
  const auto b = train(cfg, run.model, run.ds.actions, run.ds.adverbs, run.samples);
  EXPECT_EQ(encode_checkpoint(cfg, a), encode_checkpoint(cfg, b));
  EXPECT_EQ(format_train_log(a.log, false), format_train_log(b.log, false));
}

TEST(Training, LogIsContiguousAndCheckpointCadence) {
  auto run = small_run(8, 40);
  TrainConfig cfg = quick(5, 2);
  cfg.checkpoint_every = 2;
  std::vector<std::pair<std::size_t, bool>> calls;
  TrainState st = init_train_state(cfg, run.model, run.ds.actions, run.ds.adverbs);
  Trainer(cfg, run.samples).train(st, [&](const TrainState& s, bool final) {
    calls.emplace_back(s.epoch, final);
  });
  ASSERT_EQ(st.log.epochs.size(), 5u);
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_EQ(st.log.epochs[e].epoch, e);
    EXPECT_EQ(st.log.epochs[e].stage, e < 2 ? Stage::actions_only : Stage::joint);
    EXPECT_EQ(st.log.epochs[e].batches, 2u);  // ceil(40 / 32)
  }
  EXPECT_EQ(calls, (std::vector<std::pair<std::size_t, bool>>{
                       {2, false}, {4, false}, {5, true}}));
  const std::string log = format_train_log(st.log, false);
  EXPECT_EQ(log.find("wall"), std::string::npos);
  EXPECT_NE(format_train_log(st.log, true).find("wall_seconds"), std::string::npos);
}

TEST(Training, NonFiniteLossAbortsNamingSamples) {
  auto run = small_run(9, 20);
  run.samples[3].features(10, 0) = NAN;
  run.samples[3].video_id = "poisoned";
  TrainConfig cfg = quick(1, 0);
  cfg.batch_size = 20;
  TrainState st = init_train_state(cfg, run.model, run.ds.actions, run.ds.adverbs);
  std::vector<BatchItem> batch;
  for (std::size_t i = 0; i < 5; ++i) batch.push_back({i, (run.samples[i].action + 1) % 10});
  try {
    Trainer(cfg, run.samples).step(st, batch, Stage::joint);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("poisoned"), std::string::npos);
  }
}

TEST(Training, JointLossFallsOnDefaultSyntheticConfig) {
  // Majority over seeds: the last joint epoch beats the first joint epoch.
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto run = small_run(seed, 200);
    TrainConfig cfg = quick(12, 4);
    cfg.seed = seed;
    const auto st = train(cfg, run.model, run.ds.actions, run.ds.adverbs, run.samples);
    const auto& first = st.log.epochs[4];
    const auto& last = st.log.epochs.back();
    wins += (last.action_loss + last.adverb_loss) <
            (first.action_loss + first.adverb_loss);
  }
  EXPECT_GE(wins, 2);
}

TEST(Training, AlternativeLossModesRun) {
  for (LossMode mode : {LossMode::single, LossMode::any_adverb_negative}) {
    auto run = small_run(10, 40);
    TrainConfig cfg = quick(2, 1);
    cfg.loss_mode = mode;
    const auto st = train(cfg, run.model, run.ds.actions, run.ds.adverbs, run.samples);
    EXPECT_TRUE(std::isfinite(st.log.epochs.back().action_loss));
    if (mode == LossMode::single) {
      EXPECT_EQ(st.log.epochs.back().adverb_loss, 0.0);
    }
  }
}

TEST(Training, FreezeFlags) {
  auto snapshot = [](const ModelParams& p) {
    std::map<std::string, Matrix> m;
    for (const Parameter* q : p.parameters()) m[q->name] = q->value;
    return m;
  };
  // Frozen video side in stage one: only the action table moves.
  auto run = small_run(11, 40);
  TrainConfig cfg = quick(2, 2);
  cfg.freeze_attention_stage1 = true;
  TrainState st = init_train_state(cfg, run.model, run.ds.actions, run.ds.adverbs);
  auto before = snapshot(st.params);
  Trainer(cfg, run.samples).train(st);
  for (const Parameter* p : st.params.parameters()) {
    if (p->name == "action_table") {
      EXPECT_FALSE(p->value == before[p->name]);
    } else {
      EXPECT_EQ(p->value, before[p->name]) << p->name;
    }
  }

  cfg = quick(2, 1);
  cfg.freeze_action_embeddings = true;
  st = init_train_state(cfg, run.model, run.ds.actions, run.ds.adverbs);
  before = snapshot(st.params);
  Trainer(cfg, run.samples).train(st);
  EXPECT_EQ(st.params.action_table.value, before["action_table"]);
  EXPECT_FALSE(st.params.head_projection.value == before["head_projection"]);
}

// Straight-line reimplementation of three epochs (one stage-one epoch, two
// joint epochs) for the linear-modifier, average-pooling model on four
// samples: hand-derived gradients and a hand-rolled Adam.
TEST(Training, ThreeEpochsMatchStraightLineOracle) {
  using oracle::Vec;
  const std::size_t A = 3, E = 3, D = 2, T = 3, B = 4;
  std::mt19937_64 gen(99);
  ModelConfig mc = fixtures::variant(ModifierKind::linear, AttentionKind::average);
  mc.embed_dim = E;
  mc.feature_dim = D;
  mc.window = T;
  mc.heads = 1;
  mc.head_dim = E;
  TrainConfig tc;
  tc.epochs = 3;
  tc.stage1_epochs = 1;
  tc.batch_size = B;
  tc.lr = 0.05;
  tc.modifier_lr = 0.02;
  tc.seed = 17;
  const ActionVocabulary actions({"a0", "a1", "a2"}, gaussian(A, E, gen));
  const AdverbVocabulary adverbs = AdverbVocabulary::from_pairs({{"up", "down"}});
  std::vector<VideoSample> samples;
  const std::size_t acts[] = {0, 1, 2, 0}, advs[] = {0, 1, 0, 1};
  for (std::size_t i = 0; i < B; ++i) {
    auto s = fixtures::sample(gaussian(T, D, gen), acts[i], advs[i]);
    if (i == 2) {
      s.padded[0] = true;
      s.features(0, 0) = s.features(0, 1) = 0.0;
    }
    samples.push_back(s);
  }

  TrainState st = init_train_state(tc, mc, actions, adverbs);

  // Oracle state.
  struct Adam {
    std::vector<double> m, v;
    int t = 0;
  };
  Vec P(st.params.segment_projection.value.values().begin(),
        st.params.segment_projection.value.values().end());  // E x D
  Vec G(st.params.action_table.value.values().begin(),
        st.params.action_table.value.values().end());  // A x E
  std::vector<Vec> W(2, Vec(E * E, 0.0));
  for (auto& w : W)
    for (std::size_t i = 0; i < E; ++i) w[i * E + i] = 1.0;
  Adam aP{Vec(P.size()), Vec(P.size())}, aG{Vec(G.size()), Vec(G.size())};
  std::vector<Adam> aW(2, Adam{Vec(E * E), Vec(E * E)});
  Rng rng = st.rng;

  auto adam = [&](Vec& x, const Vec& g, Adam& s, double lr) {
    ++s.t;
    bool zero = true;
    for (double v : g) zero = zero && v == 0.0;
    if (zero) return;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s.m[i] = 0.9 * s.m[i] + 0.1 * g[i];
      s.v[i] = 0.999 * s.v[i] + 0.001 * g[i] * g[i];
      const double mh = s.m[i] / (1 - std::pow(0.9, s.t));
      const double vh = s.v[i] / (1 - std::pow(0.999, s.t));
      x[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  };
  auto pooled = [&](const VideoSample& s) {
    Vec p(D, 0.0);
    double n = 0;
    for (bool b : s.padded) n += !b;
    for (std::size_t t = 0; t < T; ++t)
      if (!s.padded[t])
        for (std::size_t d = 0; d < D; ++d) p[d] += s.features(t, d) / n;
    return p;
  };
  auto unit = [](const Vec& a, const Vec& b) {
    const double n = oracle::dist(a, b);
    Vec u(a.size(), 0.0);
    if (n > 0)
      for (std::size_t i = 0; i < a.size(); ++i) u[i] = (a[i] - b[i]) / n;
    return u;
  };
  auto g_row = [&](std::size_t a) { return Vec(G.begin() + a * E, G.begin() + (a + 1) * E); };
  auto apply = [&](const Vec& w, const Vec& z) {
    Vec o(E, 0.0);
    for (std::size_t i = 0; i < E; ++i)
      for (std::size_t j = 0; j < E; ++j) o[i] += w[i * E + j] * z[j];
    return o;
  };

  std::vector<std::array<double, 3>> expected;  // action, adverb, grad norm
  for (std::size_t epoch = 0; epoch < 3; ++epoch) {
    const bool joint = epoch >= 1;
    // Batch: four draws with replacement, then one negative per anchor from
    // the other actions present.
    std::uniform_int_distribution<std::size_t> pick(0, B - 1);
    std::size_t idx[B];
    std::set<std::size_t> present;
    for (auto& i : idx) present.insert(samples[i = pick(rng)].action);
    std::size_t neg[B];
    for (std::size_t k = 0; k < B; ++k) {
      std::vector<std::size_t> c;
      for (std::size_t a : present)
        if (a != samples[idx[k]].action) c.push_back(a);
      if (c.empty())
        for (std::size_t a = 0; a < A; ++a)
          if (a != samples[idx[k]].action) c.push_back(a);
      std::uniform_int_distribution<std::size_t> d(0, c.size() - 1);
      neg[k] = c[d(rng)];
    }

    Vec gP(P.size(), 0.0), gG(G.size(), 0.0);
    std::vector<Vec> gW(2, Vec(E * E, 0.0));
    double sum_act = 0, sum_adv = 0;
    for (std::size_t k = 0; k < B; ++k) {
      const VideoSample& s = samples[idx[k]];
      const Vec x = pooled(s);
      Vec f(E, 0.0);
      for (std::size_t i = 0; i < E; ++i)
        for (std::size_t d = 0; d < D; ++d) f[i] += P[i * D + d] * x[d];
      Vec df(E, 0.0);
      // One hinge term with targets p = W_pw g_pa and q = W_qw g_qa (no
      // modifier when w < 0).
      auto term = [&](int pw, std::size_t pa, int qw, std::size_t qa) {
        const Vec gp = g_row(pa), gq = g_row(qa);
        const Vec p = pw < 0 ? gp : apply(W[pw], gp);
        const Vec q = qw < 0 ? gq : apply(W[qw], gq);
        const double l = std::max(0.0, oracle::dist(f, p) - oracle::dist(f, q) + 1.0);
        if (l <= 0.0) return l;
        const Vec up = unit(f, p), uq = unit(f, q);
        for (std::size_t i = 0; i < E; ++i) df[i] += (up[i] - uq[i]) / B;
        auto back = [&](int w, std::size_t a, const Vec& g, const Vec& dt) {
          // dt = dL/d(target)
          if (w < 0) {
            for (std::size_t i = 0; i < E; ++i) gG[a * E + i] += dt[i] / B;
            return;
          }
          for (std::size_t i = 0; i < E; ++i)
            for (std::size_t j = 0; j < E; ++j) {
              gW[w][i * E + j] += dt[i] * g[j] / B;
              gG[a * E + j] += W[w][i * E + j] * dt[i] / B;
            }
        };
        Vec dp(E), dq(E);
        for (std::size_t i = 0; i < E; ++i) dp[i] = -up[i], dq[i] = uq[i];
        back(pw, pa, gp, dp);
        back(qw, qa, gq, dq);
        return l;
      };
      if (!joint) {
        sum_act += term(-1, s.action, -1, neg[k]);
      } else {
        const int m = int(s.adverb), mbar = int(adverbs.antonym(s.adverb));
        sum_act += term(m, s.action, m, neg[k]);
        sum_adv += term(m, s.action, mbar, s.action);
      }
      for (std::size_t i = 0; i < E; ++i)
        for (std::size_t d = 0; d < D; ++d) gP[i * D + d] += df[i] * x[d];
    }
    double sq = 0;
    for (double g : gP) sq += g * g;
    for (double g : gG) sq += g * g;
    for (const auto& w : gW)
      for (double g : w) sq += g * g;
    expected.push_back({sum_act / B, sum_adv / B, std::sqrt(sq)});

    adam(G, gG, aG, tc.lr);
    for (std::size_t w = 0; w < 2 && joint; ++w) adam(W[w], gW[w], aW[w], tc.modifier_lr);
    adam(P, gP, aP, tc.lr);
  }

  Trainer(tc, samples).train(st);
  ASSERT_EQ(st.log.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_LT(oracle::rel_err(st.log.epochs[e].action_loss, expected[e][0]), 1e-12) << e;
    EXPECT_LT(oracle::rel_err(st.log.epochs[e].adverb_loss, expected[e][1]), 1e-12) << e;
    EXPECT_LT(oracle::rel_err(st.log.epochs[e].grad_norm, expected[e][2]), 1e-12) << e;
  }
  EXPECT_GT(expected[1][1], 0.0);
  auto vec = [](const Matrix& m) { return Vec(m.values().begin(), m.values().end()); };
  EXPECT_LT(oracle::max_rel_err(vec(st.params.segment_projection.value), P), 1e-12);
  EXPECT_LT(oracle::max_rel_err(vec(st.params.action_table.value), G), 1e-12);
  for (std::size_t w = 0; w < 2; ++w)
    EXPECT_LT(oracle::max_rel_err(vec(st.params.modifier[w].value), W[w]), 1e-12);
  EXPECT_FALSE(vec(st.params.modifier[0].value) == vec(Matrix::identity(E)));
}
