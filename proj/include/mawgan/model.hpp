// SPDX-License-Identifier: Apache-2.0
//
// Adversarial motion predictor on the SRVF hypersphere.
//
// A prior of tau frames is mapped to its unit SRVF and charted into the
// tangent space at mu_prior (the Karcher mean of training priors). The
// predictor network maps that tangent vector to one at mu (the Karcher mean
// of training futures); exp_mu brings it back onto the sphere and the poses
// are recovered by integrating the rescaled SRVF from the last prior pose.
// A Wasserstein critic with gradient penalty scores tangent vectors at mu.
//
// Future SRVFs are taken over the curve [P_tau, P_tau+1, ..., P_T], i.e.
// T - tau intervals that start at the last observed pose, so integration from
// P_tau yields exactly the T - tau predicted frames.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mawgan/motion.hpp"
#include "mawgan/nn/adam.hpp"
#include "mawgan/nn/mlp.hpp"
#include "mawgan/rng.hpp"
#include "mawgan/sphere.hpp"

namespace mawgan {

enum class ScaleSource {
  mean_future_length, ///< training-set mean future SRVF norm
  prior_length,       ///< each prior's own speed, extrapolated over the horizon
};

std::string to_string(ScaleSource s);
ScaleSource parse_scale_source(const std::string &name);

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 500;
  double lambda_gp = 10.0;
  /// Weights of the adversarial, reconstruction, skeleton-integrity and
  /// bone-length terms in the predictor objective.
  std::array<double, 4> beta{1.0, 1.0, 10.0, 10.0};
  std::uint64_t seed = 0;
  std::size_t prior_len = 10; ///< tau
  std::size_t total_len = 20; ///< T
  ScaleSource scale_source = ScaleSource::mean_future_length;

  std::vector<std::size_t> predictor_hidden{512, 256, 256};
  std::vector<std::size_t> critic_hidden{256, 64};
  nn::Activation activation = nn::Activation::leaky_relu;
  double slope = 0.2;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-7;

  /// Critic updates per predictor update.
  std::size_t n_critic = 1;
  /// Write a checkpoint every N epochs into checkpoint_dir (0 disables).
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  /// Spread-out training sets converge slowly at step 1; the budget is
  /// larger than the geometry default.
  KarcherOptions karcher{1e-8, 10000, 1.0};
  SkeletonTopology topology;

  std::size_t future_len() const noexcept { return total_len - prior_len; }
  nn::AdamConfig adam() const { return {lr, adam_beta1, adam_beta2, adam_eps}; }
  /// Throws ErrorKind::argument.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig &cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json &j,
                                   TrainConfig base = {});

nn::MlpSpec predictor_spec(const TrainConfig &cfg);
nn::MlpSpec critic_spec(const TrainConfig &cfg);

struct LossBreakdown {
  double l_a = 0.0;
  double l_r = 0.0;
  double l_s = 0.0;
  double l_b = 0.0;
  /// Predictor: sum of beta_i * l_i. Critic: -l_a + gradient_penalty.
  double total = 0.0;
  /// Mean critic score of real futures minus that of predicted futures.
  double wasserstein_estimate = 0.0;
  /// lambda_gp * mean((|grad D| - 1)^2); critic only.
  double gradient_penalty = 0.0;
};

struct TrainState {
  nn::MlpSpec predictor_spec;
  nn::MlpSpec critic_spec;
  nn::ParamSet predictor;
  nn::ParamSet critic;
  nn::AdamState predictor_opt;
  nn::AdamState critic_opt;
  std::size_t epoch = 0;
  Rng rng;
  FrechetMean mu;       ///< reference of future SRVFs
  FrechetMean mu_prior; ///< reference of prior SRVFs
  double future_scale = 0.0;

  bool ready() const noexcept {
    return !predictor.empty() && !critic.empty() && mu.mu.samples.size() > 0 &&
           mu_prior.mu.samples.size() > 0 && future_scale > 0.0;
  }
};

/// Fresh networks and optimizer state; references left empty.
TrainState init_state(const TrainConfig &cfg);

// -- data preparation -------------------------------------------------------

/// SRVF of the prior frames (tau - 1 intervals), not normalized.
Srvf prior_srvf(const MotionSequence &prior);
/// SRVF of [last prior pose, future frames] (T - tau intervals), not normalized.
Srvf future_srvf(std::span<const double> last_prior_pose,
                 const MotionSequence &future);

struct Reference {
  FrechetMean mu;
  double future_scale = 0.0;
};

/// Karcher mean of the normalized futures and the mean of their norms
/// before normalization.
Reference prepare_reference(std::span<const Srvf> futures,
                            const KarcherOptions &opts = {});

/// Training samples charted at the references, one row per sample.
struct ChartedData {
  Tensor prior_tangent;  ///< m x (tau-1)n, log at mu_prior
  Tensor future_tangent; ///< m x (T-tau)n, log at mu
  Tensor last_pose;      ///< m x n
  Tensor future_poses;   ///< m x (T-tau)n ground-truth frames
  Tensor target_scale;   ///< m x 1, SRVF norm used for reconstruction

  std::size_t samples() const noexcept { return prior_tangent.rows(); }
  ChartedData rows(std::span<const std::size_t> idx) const;
};

/// Computes references into `state` from `data` and charts every sample.
ChartedData prepare_training(const DatasetSplit &data, const TrainConfig &cfg,
                             TrainState &state);
/// Charts samples against the references already in `state`.
ChartedData chart(const DatasetSplit &data, const TrainConfig &cfg,
                  const TrainState &state);

// -- losses -------------------------------------------------------------------

struct LossResult {
  LossBreakdown loss;
  nn::ParamGrads grads;
  /// Largest |log(exp(v)) - v_tangent| over in-radius predictor outputs.
  double chart_error = 0.0;
};

/// Critic objective -(E D(real) - E D(fake)) + lambda * GP and its gradient
/// with respect to the critic. `interp` holds the per-sample interpolation
/// weight a in [0, 1].
LossResult critic_loss(const ChartedData &priors, const ChartedData &futures,
                       std::span<const double> interp, const TrainState &state,
                       const TrainConfig &cfg);

/// Weighted predictor objective and its gradient with respect to the
/// predictor, the critic held fixed.
LossResult predictor_loss(const ChartedData &batch, const TrainState &state,
                          const TrainConfig &cfg);

// -- training -----------------------------------------------------------------

struct LogRow {
  std::size_t epoch = 0;
  std::size_t iter = 0;
  LossBreakdown loss; ///< predictor losses, critic Wasserstein estimate
};

void write_log_header(std::ostream &out);
void write_log_row(std::ostream &out, const LogRow &row);
std::vector<LogRow> read_log(std::istream &in);

struct TrainOptions {
  /// Continue from this state instead of initializing.
  std::optional<TrainState> resume;
  /// Called after every iteration.
  std::function<void(const LogRow &)> on_iteration;
};

struct TrainResult {
  TrainState state;
  std::vector<LogRow> log;
};

/// Alternates critic and predictor Adam steps on random minibatches.
/// Throws ErrorKind::numeric on a non-finite loss, naming epoch and iteration.
TrainResult train(const DatasetSplit &data, const TrainConfig &cfg,
                  TrainOptions opts = {});

// -- prediction -------------------------------------------------------------

/// T - tau predicted frames continuing the prior. Throws ErrorKind::state
/// for an untrained state.
MotionSequence predict(const MotionSequence &prior, const TrainState &state,
                       const TrainConfig &cfg);

// -- checkpoints --------------------------------------------------------------

void save_checkpoint(const std::filesystem::path &path, const TrainState &state,
                     const TrainConfig &cfg);

struct Checkpoint {
  TrainState state;
  TrainConfig config;
};
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace mawgan
