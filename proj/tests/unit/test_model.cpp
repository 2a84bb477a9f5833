// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "mawgan/metrics.hpp"
#include "mawgan/model.hpp"
#include "mawgan/nn/ops.hpp"
#include "model/model_internal.hpp"
#include "support.hpp"

using namespace mawgan;
using testing_support::max_abs_diff;
using testing_support::numeric_gradient;
using testing_support::random_tensor;
using testing_support::relative_error;
using nn::Var;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.topology = SkeletonTopology::chain(3);
  cfg.prior_len = 4;
  cfg.total_len = 7;
  cfg.predictor_hidden = {6};
  cfg.critic_hidden = {5};
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.seed = 3;
  cfg.lr = 1e-3;
  return cfg;
}

DatasetSplit tiny_data(const TrainConfig &cfg, std::size_t samples, std::uint64_t seed = 5) {
  SynthSpec spec;
  spec.joints = cfg.topology.joints;
  spec.frames = cfg.total_len;
  spec.samples = samples;
  std::vector<MotionSequence> seqs;
  for (const auto &s : synthesize_dataset(spec, seed))
    seqs.push_back(normalize(s, cfg.topology));
  return make_split(seqs, cfg.prior_len, cfg.total_len);
}

struct Fixture {
  TrainConfig cfg = tiny_config();
  DatasetSplit data = tiny_data(cfg, 6);
  TrainState state;
  ChartedData charted;
  Fixture() {
    state = init_state(cfg);
    charted = prepare_training(data, cfg, state);
  }
  ChartedData batch(std::initializer_list<std::size_t> idx) const {
    std::vector<std::size_t> v(idx);
    return charted.rows(v);
  }
};

Tensor row_of(const Tensor &t) {
  return Tensor(1, t.size(), std::vector<double>(t.values().begin(), t.values().end()));
}

} // namespace

TEST(Charts, DifferentiableChartsMatchSphereMaps) {
  std::mt19937_64 gen(1);
  const Srvf mu = testing_support::random_unit_srvf(gen, 4, 6);
  for (int i = 0; i < 20; ++i) {
    const Srvf q = testing_support::random_unit_srvf(gen, 4, 6);
    nn::Tape t;
    Var m = t.constant(row_of(mu.samples));
    const Tensor v = detail::log_at(t.constant(row_of(q.samples)), m, mu.dt).value();
    EXPECT_LT(max_abs_diff(v, row_of(log_map(mu, q).samples)), 1e-10);
    const Tensor back = detail::exp_at(t.constant(v), m, mu.dt).value();
    EXPECT_LT(max_abs_diff(back, row_of(q.samples)), 1e-10);
    const Tensor raw = random_tensor(gen, 1, 24, -0.5, 0.5);
    const Tensor e = detail::exp_at(t.constant(raw), m, mu.dt).value();
    Tensor rs(4, 6, std::vector<double>(raw.values().begin(), raw.values().end()));
    EXPECT_LT(max_abs_diff(e, row_of(exp_map(mu, TangentVector{rs, mu.dt}).samples)), 1e-12);
  }
}

TEST(Charts, GradientsMatchFiniteDifferences) {
  std::mt19937_64 gen(2);
  const Srvf mu = testing_support::random_unit_srvf(gen, 3, 3);
  const Tensor m = row_of(mu.samples);
  const Tensor v = random_tensor(gen, 2, 9, -0.6, 0.6);
  const Tensor w = random_tensor(gen, 2, 9, 0.5, 1.5);
  for (bool through_log : {false, true}) {
    auto f = [&](const Tensor &x) {
      nn::Tape t;
      Var y = detail::exp_at(t.constant(x), t.constant(m), mu.dt);
      if (through_log)
        y = detail::log_at(y, t.constant(m), mu.dt);
      return nn::sum(nn::mul(y, t.constant(w))).value().item();
    };
    nn::Tape t;
    Var x = t.variable(v);
    Var y = detail::exp_at(x, t.constant(m), mu.dt);
    if (through_log)
      y = detail::log_at(y, t.constant(m), mu.dt);
    t.backward(nn::sum(nn::mul(y, t.constant(w))));
    EXPECT_LT(relative_error(t.gradient(x), numeric_gradient(f, v)), 1e-6);
  }
}

TEST(Reference, Cases) {
  std::mt19937_64 gen(3);
  const Srvf q = testing_support::random_unit_srvf(gen, 4, 3);
  const Srvf same[] = {q, q};
  const Reference r = prepare_reference(same);
  EXPECT_LT(max_abs_diff(r.mu.mu.samples, q.samples), 1e-12);
  EXPECT_NEAR(r.future_scale, 1.0, 1e-12);
  const Srvf a = testing_support::random_unit_srvf(gen, 4, 3);
  const Srvf b = testing_support::random_unit_srvf(gen, 4, 3);
  Srvf b3 = b;
  for (double &x : b3.samples.values())
    x *= 3.0;
  b3.unit = false;
  const Srvf pair[] = {a, b3};
  const Reference mid = prepare_reference(pair);
  EXPECT_NEAR(mid.future_scale, 2.0, 1e-12);
  EXPECT_NEAR(geodesic_distance(mid.mu.mu, a), geodesic_distance(a, b) / 2, 1e-8);
  EXPECT_NEAR(geodesic_distance(mid.mu.mu, b), geodesic_distance(a, b) / 2, 1e-8);
}

TEST(Model, ConfigJsonRoundTrip) {
  TrainConfig cfg = tiny_config();
  cfg.scale_source = ScaleSource::prior_length;
  cfg.beta = {1, 2, 3, 4};
  const TrainConfig back = train_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_THROW(train_config_from_json({{"learning_rate", 1.0}}), Error);
  TrainConfig bad = cfg;
  bad.prior_len = 1;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_EQ(predictor_spec(cfg).widths, (std::vector<std::size_t>{27, 6, 27}));
  EXPECT_EQ(critic_spec(cfg).widths, (std::vector<std::size_t>{27, 5, 1}));
}

TEST(Model, InitStateIsSeeded) {
  const TrainConfig cfg = tiny_config();
  const TrainState a = init_state(cfg), b = init_state(cfg);
  EXPECT_EQ(a.predictor, b.predictor);
  EXPECT_EQ(a.critic, b.critic);
  EXPECT_EQ(a.rng, b.rng);
  EXPECT_FALSE(a.ready());
  TrainConfig other = cfg;
  other.seed = 4;
  EXPECT_NE(init_state(other).predictor, a.predictor);
}

TEST(CriticLoss, ConstantCriticGivesLambda) {
  Fixture f;
  for (auto &p : f.state.critic)
    for (double &v : p.value.values())
      v = p.name.ends_with("bias") ? 0.25 : 0.0;
  const double a[] = {0.3, 0.8};
  const LossResult r = critic_loss(f.batch({0, 1}), f.batch({2, 3}), a, f.state, f.cfg);
  EXPECT_EQ(r.loss.wasserstein_estimate, 0.0);
  EXPECT_DOUBLE_EQ(r.loss.gradient_penalty, f.cfg.lambda_gp);
  EXPECT_DOUBLE_EQ(r.loss.total, f.cfg.lambda_gp);
}

TEST(CriticLoss, UnitLinearCriticHasNoPenalty) {
  Fixture f;
  f.cfg.critic_hidden = {};
  f.state.critic_spec = critic_spec(f.cfg);
  f.state.critic = nn::init_params(f.state.critic_spec, 1);
  f.state.critic_opt = nn::AdamState::for_params(f.state.critic);
  Tensor &w = f.state.critic[0].value;
  double n = 0.0;
  for (double v : w.values())
    n += v * v;
  for (double &v : w.values())
    v /= std::sqrt(n);
  const double a[] = {0.0, 1.0, 0.5};
  const LossResult r = critic_loss(f.batch({0, 1, 2}), f.batch({3, 4, 5}), a, f.state, f.cfg);
  EXPECT_NEAR(r.loss.gradient_penalty, 0.0, 1e-25);
}

TEST(CriticLoss, GradientMatchesFiniteDifferences) {
  Fixture f;
  const ChartedData priors = f.batch({0, 1}), futures = f.batch({2, 3});
  const double a[] = {0.35, 0.7};
  const LossResult r = critic_loss(priors, futures, a, f.state, f.cfg);
  for (std::size_t i = 0; i < f.state.critic.size(); ++i) {
    auto loss = [&](const Tensor &w) {
      TrainState s = f.state;
      s.critic[i].value = w;
      return critic_loss(priors, futures, a, s, f.cfg).loss.total;
    };
    EXPECT_LT(relative_error(r.grads[i], numeric_gradient(loss, f.state.critic[i].value)), 1e-3)
        << f.state.critic[i].name;
  }
}

TEST(CriticLoss, InterpolationWeightsAreChecked) {
  Fixture f;
  const double bad[] = {0.5, 1.5};
  EXPECT_THROW(critic_loss(f.batch({0, 1}), f.batch({2, 3}), bad, f.state, f.cfg), Error);
  const double one[] = {0.5};
  EXPECT_THROW(critic_loss(f.batch({0, 1}), f.batch({2, 3}), one, f.state, f.cfg), Error);
}

TEST(PredictorLoss, GradientMatchesFiniteDifferences) {
  Fixture f;
  const ChartedData b = f.batch({1, 4});
  const LossResult r = predictor_loss(b, f.state, f.cfg);
  for (std::size_t i = 0; i < f.state.predictor.size(); ++i) {
    auto loss = [&](const Tensor &w) {
      TrainState s = f.state;
      s.predictor[i].value = w;
      return predictor_loss(b, s, f.cfg).loss.total;
    };
    EXPECT_LT(relative_error(r.grads[i], numeric_gradient(loss, f.state.predictor[i].value)), 1e-3)
        << f.state.predictor[i].name;
  }
}

TEST(PredictorLoss, TotalRecombinesFromParts) {
  Fixture f;
  f.cfg.beta = {0.7, 1.3, 2.0, 5.0};
  const LossResult r = predictor_loss(f.batch({0, 2, 5}), f.state, f.cfg);
  const LossBreakdown &l = r.loss;
  EXPECT_NEAR(l.total, 0.7 * l.l_a + 1.3 * l.l_r + 2.0 * l.l_s + 5.0 * l.l_b, 1e-12);
  f.cfg.beta = {1.5, 0.0, 0.0, 0.0};
  const LossResult only = predictor_loss(f.batch({0, 2, 5}), f.state, f.cfg);
  EXPECT_DOUBLE_EQ(only.loss.total, 1.5 * only.loss.l_a);
  EXPECT_LE(r.chart_error, 1e-9);
}

TEST(PredictorLoss, PerfectPredictionZeroesReconstructionTerms) {
  Fixture f;
  const ChartedData one = f.batch({2});
  // Scale the reconstruction with this sample's own SRVF norm.
  const auto &[prior, future] = f.data.samples[2];
  f.state.future_scale =
      to_unit(future_srvf(prior.frame(prior.frames() - 1), future)).second;
  const ChartedData b = chart(DatasetSplit{f.data.prior_len, f.data.total_len, {f.data.samples[2]}},
                              f.cfg, f.state);
  EXPECT_EQ(b.future_tangent, one.future_tangent);
  // Last layer emits the true tangent regardless of its input.
  const std::size_t last = f.state.predictor.size() - 2;
  for (double &v : f.state.predictor[last].value.values())
    v = 0.0;
  f.state.predictor[last + 1].value = b.future_tangent;
  const LossResult r = predictor_loss(b, f.state, f.cfg);
  EXPECT_LT(r.loss.l_r, 1e-12);
  EXPECT_LT(std::abs(r.loss.l_s), 1e-12);
  EXPECT_LT(r.loss.l_b, 1e-12);
}

TEST(PredictorLoss, IndependentOfPenaltyWeight) {
  Fixture f;
  const LossResult a = predictor_loss(f.batch({0, 1}), f.state, f.cfg);
  f.cfg.lambda_gp = 0.0;
  const LossResult b = predictor_loss(f.batch({0, 1}), f.state, f.cfg);
  EXPECT_EQ(a.grads, b.grads);
  EXPECT_EQ(a.loss.total, b.loss.total);
}

TEST(Losses, RequireReferences) {
  const TrainConfig cfg = tiny_config();
  const TrainState s = init_state(cfg);
  Fixture f;
  try {
    predictor_loss(f.batch({0}), s, cfg);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::state);
  }
}

TEST(Train, ZeroEpochsOnlySetsReferences) {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  const DatasetSplit data = tiny_data(cfg, 6);
  const TrainResult r = train(data, cfg);
  const TrainState fresh = init_state(cfg);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.state.predictor, fresh.predictor);
  EXPECT_EQ(r.state.critic, fresh.critic);
  EXPECT_EQ(r.state.rng, fresh.rng);
  EXPECT_TRUE(r.state.ready());
}

TEST(Train, DeterministicAndLogged) {
  const TrainConfig cfg = tiny_config();
  const DatasetSplit data = tiny_data(cfg, 10);
  std::size_t calls = 0;
  TrainOptions opts;
  opts.on_iteration = [&](const LogRow &) { ++calls; };
  const TrainResult a = train(data, cfg, opts);
  const TrainResult b = train(data, cfg);
  ASSERT_EQ(a.log.size(), 2u * 3u); // ceil(10 / 4) iterations per epoch
  EXPECT_EQ(calls, a.log.size());
  EXPECT_EQ(a.state.predictor, b.state.predictor);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].loss.total, b.log[i].loss.total);
    EXPECT_EQ(a.log[i].loss.wasserstein_estimate, b.log[i].loss.wasserstein_estimate);
  }
  EXPECT_NE(a.state.predictor, init_state(cfg).predictor);
  EXPECT_EQ(a.state.epoch, 2u);
}

TEST(Train, ResumeContinuesTheSameRun) {
  testing_support::TempDir dir("resume");
  TrainConfig cfg = tiny_config();
  cfg.epochs = 3;
  const DatasetSplit data = tiny_data(cfg, 8);
  const TrainResult full = train(data, cfg);
  TrainConfig first = cfg;
  first.epochs = 1;
  const TrainResult part = train(data, first);
  save_checkpoint(dir.path() / "c.bin", part.state, first);
  Checkpoint ck = load_checkpoint(dir.path() / "c.bin");
  TrainOptions opts;
  opts.resume = std::move(ck.state);
  const TrainResult rest = train(data, cfg, opts);
  EXPECT_EQ(rest.state.predictor, full.state.predictor);
  EXPECT_EQ(rest.state.critic, full.state.critic);
  ASSERT_EQ(rest.log.size() + part.log.size(), full.log.size());
  EXPECT_EQ(rest.log.back().loss.total, full.log.back().loss.total);
}

TEST(Train, PeriodicCheckpoints) {
  testing_support::TempDir dir("periodic");
  TrainConfig cfg = tiny_config();
  cfg.epochs = 4;
  cfg.checkpoint_every = 2;
  cfg.checkpoint_dir = dir.path();
  train(tiny_data(cfg, 5), cfg);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "checkpoint-epoch2.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "checkpoint-epoch4.bin"));
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "checkpoint-epoch3.bin"));
  EXPECT_EQ(load_checkpoint(dir.path() / "checkpoint-epoch2.bin").state.epoch, 2u);
}

TEST(Train, DivergenceAbortsWithPosition) {
  TrainConfig cfg = tiny_config();
  cfg.lr = 1e300;
  cfg.epochs = 50;
  try {
    train(tiny_data(cfg, 6), cfg);
    FAIL() << "training did not diverge";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(Train, LogRoundTrip) {
  const TrainConfig cfg = tiny_config();
  const TrainResult r = train(tiny_data(cfg, 6), cfg);
  std::stringstream buf;
  write_log_header(buf);
  for (const auto &row : r.log)
    write_log_row(buf, row);
  const auto back = read_log(buf);
  ASSERT_EQ(back.size(), r.log.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].epoch, r.log[i].epoch);
    EXPECT_EQ(back[i].loss.l_s, r.log[i].loss.l_s);
    EXPECT_EQ(back[i].loss.wasserstein_estimate, r.log[i].loss.wasserstein_estimate);
  }
}

TEST(Predict, ZeroPredictorReconstructsMean) {
  Fixture f;
  for (auto &p : f.state.predictor)
    for (double &v : p.value.values())
      v = 0.0;
  const auto &prior = f.data.samples[0].first;
  const MotionSequence out = predict(prior, f.state, f.cfg);
  ASSERT_EQ(out.frames(), f.cfg.future_len());
  // Oracle: integrate mu * future_scale from the last prior pose.
  Srvf q = f.state.mu.mu;
  for (double &v : q.samples.values())
    v *= f.state.future_scale;
  const Curve c = srvf_to_curve(q, prior.frame(prior.frames() - 1));
  for (std::size_t t = 0; t < out.frames(); ++t)
    for (std::size_t i = 0; i < out.dim(); ++i)
      EXPECT_NEAR(out.coords()(t, i), c.samples(t + 1, i), 1e-12);
  // First step from P_tau is dt * |q_0| * q_0.
  const double dt = q.dt;
  const auto q0 = q.samples.row_span(0);
  double n0 = 0.0;
  for (double v : q0)
    n0 += v * v;
  n0 = std::sqrt(n0);
  for (std::size_t i = 0; i < out.dim(); ++i)
    EXPECT_NEAR(out.coords()(0, i) - prior.frame(prior.frames() - 1)[i], dt * n0 * q0[i], 1e-12);
}

TEST(Predict, MatchesTrainingForwardPass) {
  Fixture f;
  const ChartedData b = f.batch({3});
  nn::Tape t;
  const auto fc = detail::forecast(t, f.state, b.prior_tangent, false);
  const Tensor poses = detail::reconstruct(t, fc.q_hat, b.target_scale, b.last_pose,
                                           f.state.mu.mu.dt)
                           .value();
  const MotionSequence out = predict(f.data.samples[3].first, f.state, f.cfg);
  EXPECT_LT(max_abs_diff(row_of(out.coords()), poses), 1e-10);
}

TEST(Predict, Errors) {
  Fixture f;
  const TrainConfig cfg = tiny_config();
  EXPECT_THROW(predict(f.data.samples[0].first, init_state(cfg), cfg), Error);
  const MotionSequence longer = concatenate(f.data.samples[0].first, f.data.samples[0].second);
  EXPECT_THROW(predict(longer, f.state, f.cfg), Error);
}

TEST(Checkpoint, RoundTripIsExact) {
  testing_support::TempDir dir("ckpt");
  TrainConfig cfg = tiny_config();
  cfg.scale_source = ScaleSource::prior_length;
  const TrainResult r = train(tiny_data(cfg, 6), cfg);
  save_checkpoint(dir.path() / "c.bin", r.state, cfg);
  const Checkpoint ck = load_checkpoint(dir.path() / "c.bin");
  EXPECT_EQ(ck.state.predictor, r.state.predictor);
  EXPECT_EQ(ck.state.critic, r.state.critic);
  EXPECT_EQ(ck.state.predictor_opt, r.state.predictor_opt);
  EXPECT_EQ(ck.state.critic_opt, r.state.critic_opt);
  EXPECT_EQ(ck.state.rng, r.state.rng);
  EXPECT_EQ(ck.state.mu.mu.samples, r.state.mu.mu.samples);
  EXPECT_EQ(ck.state.mu_prior.mu.samples, r.state.mu_prior.mu.samples);
  EXPECT_EQ(ck.state.future_scale, r.state.future_scale);
  EXPECT_EQ(ck.state.epoch, r.state.epoch);
  EXPECT_EQ(ck.config.scale_source, ScaleSource::prior_length);
  EXPECT_EQ(to_json(ck.config), to_json(cfg));
  const DatasetSplit data = tiny_data(cfg, 6);
  const auto &prior = data.samples[0].first;
  EXPECT_EQ(predict(prior, ck.state, ck.config), predict(prior, r.state, cfg));
  // Saving the loaded checkpoint reproduces the file byte for byte.
  save_checkpoint(dir.path() / "d.bin", ck.state, ck.config);
  auto slurp = [](const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(dir.path() / "c.bin"), slurp(dir.path() / "d.bin"));
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.bin"), Error);
}
