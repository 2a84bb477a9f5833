// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "mawgan/model.hpp"
#include "mawgan/nn/ops.hpp"
#include "model_internal.hpp"

namespace mawgan {

using nn::Tape;
using nn::Var;

namespace detail {

Var exp_at(Var v, Var mu, double dt) {
  Var c = nn::scale(nn::matmul_nt(v, mu), dt);
  Var t = nn::sub(v, nn::matmul(c, mu));
  Var n = nn::scale(nn::row_norm(t), std::sqrt(dt));
  return nn::add(nn::matmul(nn::cos(n), mu), nn::mul_colvec(t, nn::sinc(n)));
}

Var log_at(Var q, Var mu, double dt) {
  Tape &tape = *q.tape;
  Var c = nn::scale(nn::matmul_nt(q, mu), dt);
  Var w = nn::sub(q, nn::matmul(c, mu));
  Var d = nn::acos_clamped(c);
  Var inv = nn::div(tape.constant(Tensor(q.rows(), 1, 1.0)), nn::sinc(d));
  return nn::mul_colvec(w, inv);
}

Forecast forecast(Tape &tape, const TrainState &state, const Tensor &prior_tangent,
                  bool trainable) {
  const double dt = state.mu.mu.dt;
  const Tensor &mu = state.mu.mu.samples;
  Var mu_row = tape.constant(Tensor(1, mu.size(), std::vector<double>(
                                                      mu.values().begin(), mu.values().end())));
  Var x = tape.constant(prior_tangent);
  Forecast f;
  f.v = nn::forward(tape, state.predictor_spec, state.predictor, x, trainable).output;
  f.q_hat = exp_at(f.v, mu_row, dt);
  f.fake = log_at(f.q_hat, mu_row, dt);
  return f;
}

double chart_error(const Tensor &v, const Tensor &fake, const Tensor &mu, double dt) {
  double worst = 0.0;
  const std::size_t d = v.cols();
  for (std::size_t r = 0; r < v.rows(); ++r) {
    auto vr = v.row_span(r);
    double c = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      c += vr[i] * mu[i];
    c *= dt;
    std::vector<double> t(d);
    double sq = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      t[i] = vr[i] - c * mu[i];
      sq += t[i] * t[i];
      scale = std::max(scale, std::abs(t[i]));
    }
    if (std::sqrt(sq * dt) >= std::numbers::pi - 1e-3)
      continue;
    for (std::size_t i = 0; i < d; ++i)
      worst = std::max(worst, std::abs(fake(r, i) - t[i]) / scale);
  }
  return worst;
}

Var reconstruct(Tape &tape, Var q_hat, const Tensor &target_scale, const Tensor &last_pose,
                double dt) {
  const std::size_t n = last_pose.cols();
  Var q = nn::mul_colvec(q_hat, tape.constant(target_scale));
  Var step = nn::scale(nn::block_norm(q, n), dt);
  Var disp = nn::block_scale(q, step, n);
  return nn::add_block_broadcast(nn::cumsum_blocks(disp, n), tape.constant(last_pose), n);
}

} // namespace detail

namespace {

void check_batch(const ChartedData &b, const TrainState &state, const char *op) {
  if (!state.ready())
    fail(ErrorKind::state, std::string(op) + ": state has no references; train first");
  if (b.samples() == 0)
    fail(ErrorKind::argument, std::string(op) + ": empty batch");
  if (b.prior_tangent.cols() != state.predictor_spec.input_width() ||
      b.future_tangent.cols() != state.critic_spec.input_width())
    fail(ErrorKind::shape, std::string(op) + ": batch widths " +
                               b.prior_tangent.shape_string() + ", " +
                               b.future_tangent.shape_string() +
                               " do not match the networks");
}

// Per-frame squared Frobenius norms of a ground-truth pose block.
Tensor frame_traces(const Tensor &poses, std::size_t n) {
  const std::size_t frames = poses.cols() / n;
  Tensor out(poses.rows(), frames);
  for (std::size_t r = 0; r < poses.rows(); ++r)
    for (std::size_t f = 0; f < frames; ++f) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double v = poses(r, f * n + c);
        s += v * v;
      }
      out(r, f) = s;
    }
  return out;
}

Tensor bone_lengths(const Tensor &poses, const SkeletonTopology &topo) {
  const std::size_t n = 3 * topo.joints;
  const std::size_t frames = poses.cols() / n;
  const std::size_t B = topo.bones.size();
  Tensor out(poses.rows(), frames * B);
  for (std::size_t r = 0; r < poses.rows(); ++r)
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t b = 0; b < B; ++b) {
        const Bone &bone = topo.bones[b];
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
          const double d = poses(r, f * n + 3 * bone.child + c) -
                           poses(r, f * n + 3 * bone.parent + c);
          s += d * d;
        }
        out(r, f * B + b) = std::sqrt(s);
      }
  return out;
}

} // namespace

LossResult critic_loss(const ChartedData &priors, const ChartedData &futures,
                       std::span<const double> interp, const TrainState &state,
                       const TrainConfig &cfg) {
  check_batch(priors, state, "critic_loss");
  check_batch(futures, state, "critic_loss");
  const std::size_t m = futures.samples();
  if (priors.samples() != m || interp.size() != m)
    fail(ErrorKind::shape, "critic_loss: " + std::to_string(priors.samples()) +
                               " priors, " + std::to_string(m) + " futures, " +
                               std::to_string(interp.size()) + " interpolation weights");

  // Predicted futures enter the critic objective as data.
  Tensor fake;
  {
    Tape gen;
    fake = detail::forecast(gen, state, priors.prior_tangent, false).fake.value();
  }
  const Tensor &real = futures.future_tangent;
  Tensor mix(m, real.cols());
  for (std::size_t r = 0; r < m; ++r) {
    const double a = interp[r];
    if (!(a >= 0.0 && a <= 1.0))
      fail(ErrorKind::argument, "critic_loss: interpolation weight outside [0, 1]");
    for (std::size_t c = 0; c < real.cols(); ++c)
      mix(r, c) = (1.0 - a) * real(r, c) + a * fake(r, c);
  }

  Tape tape;
  const nn::MlpSpec &spec = state.critic_spec;
  Var d_real = nn::forward(tape, spec, state.critic, tape.constant(real)).output;
  Var d_fake = nn::forward(tape, spec, state.critic, tape.constant(std::move(fake))).output;
  Var w = nn::sub(nn::mean(d_real), nn::mean(d_fake));
  nn::MlpTrace mixed = nn::forward(tape, spec, state.critic, tape.constant(std::move(mix)));
  Var gnorm = nn::row_norm(nn::input_gradient(tape, spec, mixed));
  Var gp = nn::scale(nn::mean(nn::square(nn::add_scalar(gnorm, -1.0))), cfg.lambda_gp);
  Var total = nn::add(nn::scale(w, -1.0), gp);
  tape.backward(total);

  LossResult out;
  out.loss.l_a = w.value().item();
  out.loss.wasserstein_estimate = out.loss.l_a;
  out.loss.gradient_penalty = gp.value().item();
  out.loss.total = total.value().item();
  out.grads = tape.gradients(state.critic);
  return out;
}

LossResult predictor_loss(const ChartedData &batch, const TrainState &state,
                          const TrainConfig &cfg) {
  check_batch(batch, state, "predictor_loss");
  const std::size_t m = batch.samples();
  const std::size_t k = cfg.topology.joints;
  const std::size_t n = 3 * k;
  if (batch.last_pose.cols() != n)
    fail(ErrorKind::shape, "predictor_loss: poses do not match the topology");
  const double dt = state.mu.mu.dt;

  Tape tape;
  detail::Forecast f = detail::forecast(tape, state, batch.prior_tangent, true);

  Var score = nn::forward(tape, state.critic_spec, state.critic, f.fake, false).output;
  Var l_a = nn::scale(nn::mean(score), -1.0);

  Var real = tape.constant(batch.future_tangent);
  Var l_r = nn::scale(nn::sum(nn::abs(nn::sub(f.fake, real))), 1.0 / static_cast<double>(m));

  Var poses = detail::reconstruct(tape, f.q_hat, batch.target_scale, batch.last_pose, dt);
  Var gt = tape.constant(batch.future_poses);
  // Gram distance per frame: Tr(P P^T) + Tr(G G^T) - 2 * nuclear(P^T G).
  Var tr_pred = nn::block_sum(nn::square(poses), n);
  Var tr_gt = tape.constant(frame_traces(batch.future_poses, n));
  Var nuc = nn::nuclear_norm3x3(nn::pose_cross(poses, gt, k));
  Var l_s = nn::mean(nn::sub(nn::add(tr_pred, tr_gt), nn::scale(nuc, 2.0)));

  Var len_pred = nn::block_norm(nn::bone_vectors(poses, cfg.topology.bones, k), 3);
  Var len_gt = tape.constant(bone_lengths(batch.future_poses, cfg.topology));
  Var l_b = nn::mean(nn::abs(nn::sub(len_pred, len_gt)));

  Var total = nn::add(nn::add(nn::add(nn::scale(l_a, cfg.beta[0]), nn::scale(l_r, cfg.beta[1])),
                              nn::scale(l_s, cfg.beta[2])),
                      nn::scale(l_b, cfg.beta[3]));
  tape.backward(total);

  LossResult out;
  out.loss.l_a = l_a.value().item();
  out.loss.l_r = l_r.value().item();
  out.loss.l_s = l_s.value().item();
  out.loss.l_b = l_b.value().item();
  out.loss.total = total.value().item();
  out.grads = tape.gradients(state.predictor);
  out.chart_error = detail::chart_error(f.v.value(), f.fake.value(), state.mu.mu.samples, dt);
  return out;
}

} // namespace mawgan
