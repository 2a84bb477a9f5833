// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "../format.hpp"
#include "mawgan/model.hpp"

namespace mawgan {

namespace {

// Largest chart round-trip error tolerated on in-radius predictor outputs.
constexpr double kChartTolerance = 1e-9;

// k distinct indices from [0, m) by a partial Fisher-Yates shuffle.
std::vector<std::size_t> draw(Rng &rng, std::size_t m, std::size_t k) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i)
    std::swap(idx[i], idx[i + rng.index(m - i)]);
  idx.resize(k);
  return idx;
}

bool finite(const LossBreakdown &l) {
  return std::isfinite(l.l_a) && std::isfinite(l.l_r) && std::isfinite(l.l_s) &&
         std::isfinite(l.l_b) && std::isfinite(l.total) &&
         std::isfinite(l.wasserstein_estimate) && std::isfinite(l.gradient_penalty);
}

bool finite(const nn::ParamGrads &g) {
  for (const Tensor &t : g)
    if (!t.all_finite())
      return false;
  return true;
}

[[noreturn]] void diverged(const char *what, std::size_t epoch, std::size_t iter) {
  fail(ErrorKind::numeric, std::string("non-finite ") + what + " at epoch " +
                               std::to_string(epoch) + ", iteration " +
                               std::to_string(iter) + "; training aborted");
}

} // namespace

void write_log_header(std::ostream &out) {
  out << "epoch,iter,l_a,l_r,l_s,l_b,total,wasserstein_estimate\n";
}

void write_log_row(std::ostream &out, const LogRow &row) {
  using detail::format_number;
  const LossBreakdown &l = row.loss;
  out << row.epoch << ',' << row.iter << ',' << format_number(l.l_a) << ','
      << format_number(l.l_r) << ',' << format_number(l.l_s) << ','
      << format_number(l.l_b) << ',' << format_number(l.total) << ','
      << format_number(l.wasserstein_estimate) << '\n';
}

std::vector<LogRow> read_log(std::istream &in) {
  std::vector<LogRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty())
      continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 8)
      fail(ErrorKind::parse, "training log line " + std::to_string(lineno) +
                                 ": expected 8 fields, got " +
                                 std::to_string(fields.size()));
    std::vector<double> v;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      auto x = detail::parse_number(fields[i]);
      if (!x)
        fail(ErrorKind::parse, "training log line " + std::to_string(lineno) +
                                   ": field " + std::to_string(i + 1) +
                                   " is not a number");
      v.push_back(*x);
    }
    LogRow r;
    r.epoch = static_cast<std::size_t>(v[0]);
    r.iter = static_cast<std::size_t>(v[1]);
    r.loss = {v[2], v[3], v[4], v[5], v[6], v[7], 0.0};
    rows.push_back(r);
  }
  return rows;
}

TrainResult train(const DatasetSplit &data, const TrainConfig &cfg, TrainOptions opts) {
  cfg.validate();
  if (data.samples.empty())
    fail(ErrorKind::argument, "training set is empty");
  TrainResult result;
  ChartedData charted;
  if (opts.resume) {
    result.state = std::move(*opts.resume);
    if (result.state.predictor_spec != predictor_spec(cfg) ||
        result.state.critic_spec != critic_spec(cfg))
      fail(ErrorKind::argument, "checkpoint networks do not match the configuration");
    charted = chart(data, cfg, result.state);
  } else {
    result.state = init_state(cfg);
    charted = prepare_training(data, cfg, result.state);
  }
  TrainState &s = result.state;
  const nn::AdamConfig adam = cfg.adam();
  const std::size_t m = charted.samples();
  const std::size_t K = std::min(cfg.batch_size, m);
  const std::size_t iters = (m + K - 1) / K;

  for (std::size_t epoch = s.epoch; epoch < cfg.epochs; ++epoch) {
    for (std::size_t it = 0; it < iters; ++it) {
      LossResult critic;
      for (std::size_t c = 0; c < cfg.n_critic; ++c) {
        const auto prior_idx = draw(s.rng, m, K);
        const auto future_idx = draw(s.rng, m, K);
        std::vector<double> a(K);
        for (double &x : a)
          x = s.rng.uniform();
        critic = critic_loss(charted.rows(prior_idx), charted.rows(future_idx), a, s, cfg);
        if (!finite(critic.loss) || !finite(critic.grads))
          diverged("critic loss", epoch, it);
        nn::adam_step(s.critic, critic.grads, s.critic_opt, adam);
      }
      const auto idx = draw(s.rng, m, K);
      LossResult pred = predictor_loss(charted.rows(idx), s, cfg);
      if (!finite(pred.loss) || !finite(pred.grads))
        diverged("predictor loss", epoch, it);
      if (!(pred.chart_error <= kChartTolerance))
        fail(ErrorKind::numeric, "log/exp chart round trip error " +
                                     std::to_string(pred.chart_error) + " at epoch " +
                                     std::to_string(epoch) + ", iteration " +
                                     std::to_string(it));
      nn::adam_step(s.predictor, pred.grads, s.predictor_opt, adam);

      LogRow row{epoch, it, pred.loss};
      row.loss.wasserstein_estimate = critic.loss.wasserstein_estimate;
      result.log.push_back(row);
      if (opts.on_iteration)
        opts.on_iteration(row);
    }
    s.epoch = epoch + 1;
    if (cfg.checkpoint_every > 0 && s.epoch % cfg.checkpoint_every == 0) {
      std::ostringstream name;
      name << "checkpoint-epoch" << s.epoch << ".bin";
      save_checkpoint(cfg.checkpoint_dir / name.str(), s, cfg);
    }
  }
  return result;
}

MotionSequence predict(const MotionSequence &prior, const TrainState &state,
                       const TrainConfig &cfg) {
  if (!state.ready())
    fail(ErrorKind::state, "predict: the model has not been trained");
  if (prior.frames() != cfg.prior_len)
    fail(ErrorKind::shape, "predict: prior has " + std::to_string(prior.frames()) +
                               " frames, model expects " + std::to_string(cfg.prior_len));
  if (prior.joints() != cfg.topology.joints)
    fail(ErrorKind::shape, "predict: prior has " + std::to_string(prior.joints()) +
                               " joints, model expects " +
                               std::to_string(cfg.topology.joints));
  auto [q_prior, prior_norm] = to_unit(prior_srvf(prior));
  const TangentVector x = log_map(state.mu_prior.mu, q_prior);
  const Tensor flat(1, x.samples.size(),
                    std::vector<double>(x.samples.values().begin(), x.samples.values().end()));
  const Tensor v = nn::evaluate(state.predictor_spec, state.predictor, flat);

  const Srvf &mu = state.mu.mu;
  TangentVector tv{Tensor(mu.samples.rows(), mu.samples.cols(),
                          std::vector<double>(v.values().begin(), v.values().end())),
                   mu.dt};
  Srvf q = exp_map(mu, tv);
  const double scale =
      cfg.scale_source == ScaleSource::prior_length
          ? prior_norm * std::sqrt(static_cast<double>(cfg.future_len()) /
                                   static_cast<double>(cfg.prior_len - 1))
          : state.future_scale;
  for (double &e : q.samples.values())
    e *= scale;
  q.unit = false;
  const Curve c = srvf_to_curve(q, prior.frame(prior.frames() - 1));
  Tensor frames(cfg.future_len(), prior.dim());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    auto src = c.samples.row_span(t + 1);
    std::copy(src.begin(), src.end(), frames.row_span(t).begin());
  }
  return MotionSequence(prior.joints(), prior.fps(), std::move(frames), prior.label());
}

} // namespace mawgan
