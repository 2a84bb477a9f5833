// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "mawgan/model.hpp"

namespace mawgan {

namespace {

void check_sample(const DatasetSplit &data, const TrainConfig &cfg, std::size_t i) {
  const auto &[prior, future] = data.samples[i];
  const std::size_t k = cfg.topology.joints;
  if (prior.joints() != k || future.joints() != k)
    fail(ErrorKind::shape, "sample " + std::to_string(i) + " has " +
                               std::to_string(prior.joints()) +
                               " joints, topology has " + std::to_string(k));
  if (prior.frames() != cfg.prior_len || future.frames() != cfg.future_len())
    fail(ErrorKind::shape, "sample " + std::to_string(i) + " has " +
                               std::to_string(prior.frames()) + "+" +
                               std::to_string(future.frames()) +
                               " frames, configuration expects " +
                               std::to_string(cfg.prior_len) + "+" +
                               std::to_string(cfg.future_len()));
}

// Runs f, prefixing geometry failures with the sample index.
template <class F> auto for_sample(std::size_t i, F f) {
  try {
    return f();
  } catch (const ConvergenceError &) {
    throw;
  } catch (const Error &e) {
    fail(e.kind(), "sample " + std::to_string(i) + ": " + e.what());
  }
}

void copy_row(Tensor &dst, std::size_t r, std::span<const double> src) {
  std::copy(src.begin(), src.end(), dst.row_span(r).begin());
}

} // namespace

Srvf prior_srvf(const MotionSequence &prior) { return curve_to_srvf(to_curve(prior)); }

Srvf future_srvf(std::span<const double> last_prior_pose, const MotionSequence &future) {
  if (last_prior_pose.size() != future.dim())
    fail(ErrorKind::shape, "last prior pose has " + std::to_string(last_prior_pose.size()) +
                               " values, future frames have " + std::to_string(future.dim()));
  Curve c{Tensor(future.frames() + 1, future.dim())};
  copy_row(c.samples, 0, last_prior_pose);
  for (std::size_t t = 0; t < future.frames(); ++t)
    copy_row(c.samples, t + 1, future.frame(t));
  return curve_to_srvf(c);
}

Reference prepare_reference(std::span<const Srvf> futures, const KarcherOptions &opts) {
  if (futures.empty())
    fail(ErrorKind::argument, "prepare_reference: no training futures");
  std::vector<Srvf> units;
  units.reserve(futures.size());
  double norm_sum = 0.0;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    auto [u, norm] = for_sample(i, [&] { return to_unit(futures[i]); });
    units.push_back(std::move(u));
    norm_sum += norm;
  }
  Reference ref;
  ref.mu = karcher_mean(units, opts);
  ref.future_scale = norm_sum / static_cast<double>(futures.size());
  return ref;
}

ChartedData ChartedData::rows(std::span<const std::size_t> idx) const {
  auto gather = [&](const Tensor &src) {
    Tensor out(idx.size(), src.cols());
    for (std::size_t r = 0; r < idx.size(); ++r)
      copy_row(out, r, src.row_span(idx[r]));
    return out;
  };
  return {gather(prior_tangent), gather(future_tangent), gather(last_pose),
          gather(future_poses), gather(target_scale)};
}

ChartedData prepare_training(const DatasetSplit &data, const TrainConfig &cfg,
                             TrainState &state) {
  cfg.validate();
  if (data.samples.empty())
    fail(ErrorKind::argument, "training set is empty");
  std::vector<Srvf> futures, priors;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    check_sample(data, cfg, i);
    const auto &[prior, future] = data.samples[i];
    futures.push_back(future_srvf(prior.frame(prior.frames() - 1), future));
    priors.push_back(for_sample(i, [&] { return to_unit(prior_srvf(prior)).first; }));
  }
  Reference ref = prepare_reference(futures, cfg.karcher);
  state.mu = std::move(ref.mu);
  state.future_scale = ref.future_scale;
  state.mu_prior = karcher_mean(priors, cfg.karcher);
  return chart(data, cfg, state);
}

ChartedData chart(const DatasetSplit &data, const TrainConfig &cfg, const TrainState &state) {
  cfg.validate();
  if (!state.ready())
    fail(ErrorKind::state, "chart: references have not been computed");
  const std::size_t m = data.samples.size();
  const std::size_t n = 3 * cfg.topology.joints;
  const std::size_t F = cfg.future_len();
  ChartedData out{Tensor(m, (cfg.prior_len - 1) * n), Tensor(m, F * n), Tensor(m, n),
                  Tensor(m, F * n), Tensor(m, 1)};
  const double horizon_ratio = std::sqrt(static_cast<double>(F) /
                                         static_cast<double>(cfg.prior_len - 1));
  for (std::size_t i = 0; i < m; ++i) {
    check_sample(data, cfg, i);
    const auto &[prior, future] = data.samples[i];
    const auto last = prior.frame(prior.frames() - 1);
    for_sample(i, [&] {
      auto [qp, prior_norm] = to_unit(prior_srvf(prior));
      const Srvf qf = to_unit(future_srvf(last, future)).first;
      copy_row(out.prior_tangent, i, log_map(state.mu_prior.mu, qp).samples.values());
      copy_row(out.future_tangent, i, log_map(state.mu.mu, qf).samples.values());
      out.target_scale[i] = cfg.scale_source == ScaleSource::prior_length
                                ? prior_norm * horizon_ratio
                                : state.future_scale;
      return 0;
    });
    copy_row(out.last_pose, i, last);
    for (std::size_t t = 0; t < F; ++t)
      std::copy(future.frame(t).begin(), future.frame(t).end(),
                out.future_poses.row_span(i).begin() + t * n);
  }
  return out;
}

} // namespace mawgan
