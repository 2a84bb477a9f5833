// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "mawgan/model.hpp"
#include "mawgan/nn/param_file.hpp"

namespace mawgan {

using nlohmann::json;

std::string to_string(ScaleSource s) {
  return s == ScaleSource::prior_length ? "prior-length" : "mean-future-length";
}

ScaleSource parse_scale_source(const std::string &name) {
  if (name == "mean-future-length")
    return ScaleSource::mean_future_length;
  if (name == "prior-length")
    return ScaleSource::prior_length;
  fail(ErrorKind::argument, "unknown scale source '" + name +
                                "' (expected mean-future-length or prior-length)");
}

void TrainConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(lr))
    fail(ErrorKind::argument, "lr must be positive");
  if (batch_size == 0)
    fail(ErrorKind::argument, "batch_size must be at least 1");
  if (!(lambda_gp >= 0.0) || !std::isfinite(lambda_gp))
    fail(ErrorKind::argument, "lambda_gp must be nonnegative");
  for (double b : beta)
    if (!(b >= 0.0) || !std::isfinite(b))
      fail(ErrorKind::argument, "loss weights must be nonnegative");
  if (prior_len < 2)
    fail(ErrorKind::argument, "prior_len must be at least 2 frames");
  if (total_len <= prior_len)
    fail(ErrorKind::argument, "total_len must exceed prior_len");
  if (n_critic == 0)
    fail(ErrorKind::argument, "n_critic must be at least 1");
  for (std::size_t w : predictor_hidden)
    if (w == 0)
      fail(ErrorKind::argument, "predictor widths must be at least 1");
  for (std::size_t w : critic_hidden)
    if (w == 0)
      fail(ErrorKind::argument, "critic widths must be at least 1");
  if (!(slope >= 0.0))
    fail(ErrorKind::argument, "slope must be nonnegative");
  adam().validate();
  topology.validate();
}

json to_json(const TrainConfig &cfg) {
  json bones = json::array();
  for (const Bone &b : cfg.topology.bones)
    bones.push_back({b.parent, b.child});
  return {
      {"lr", cfg.lr},
      {"batch_size", cfg.batch_size},
      {"epochs", cfg.epochs},
      {"lambda_gp", cfg.lambda_gp},
      {"beta", cfg.beta},
      {"seed", cfg.seed},
      {"prior_len", cfg.prior_len},
      {"total_len", cfg.total_len},
      {"scale_source", to_string(cfg.scale_source)},
      {"predictor_hidden", cfg.predictor_hidden},
      {"critic_hidden", cfg.critic_hidden},
      {"activation", nn::to_string(cfg.activation)},
      {"slope", cfg.slope},
      {"adam_beta1", cfg.adam_beta1},
      {"adam_beta2", cfg.adam_beta2},
      {"adam_eps", cfg.adam_eps},
      {"n_critic", cfg.n_critic},
      {"checkpoint_every", cfg.checkpoint_every},
      {"checkpoint_dir", cfg.checkpoint_dir.string()},
      {"karcher",
       {{"tol", cfg.karcher.tol},
        {"max_iter", cfg.karcher.max_iter},
        {"step", cfg.karcher.step}}},
      {"topology",
       {{"joints", cfg.topology.joints}, {"hip", cfg.topology.hip}, {"bones", bones}}},
  };
}

TrainConfig train_config_from_json(const json &j, TrainConfig cfg) {
  if (!j.is_object())
    fail(ErrorKind::parse, "training configuration must be a JSON object");
  static const std::set<std::string> known = {
      "lr",         "batch_size",       "epochs",        "lambda_gp",
      "beta",       "seed",             "prior_len",     "total_len",
      "scale_source", "predictor_hidden", "critic_hidden", "activation",
      "slope",      "adam_beta1",       "adam_beta2",    "adam_eps",
      "n_critic",   "checkpoint_every", "checkpoint_dir", "karcher",
      "topology"};
  for (const auto &[key, value] : j.items())
    if (!known.contains(key))
      fail(ErrorKind::parse, "unknown training option '" + key + "'");
  try {
    auto get = [&](const char *key, auto &dst) {
      if (j.contains(key))
        j.at(key).get_to(dst);
    };
    get("lr", cfg.lr);
    get("batch_size", cfg.batch_size);
    get("epochs", cfg.epochs);
    get("lambda_gp", cfg.lambda_gp);
    get("beta", cfg.beta);
    get("seed", cfg.seed);
    get("prior_len", cfg.prior_len);
    get("total_len", cfg.total_len);
    if (j.contains("scale_source"))
      cfg.scale_source = parse_scale_source(j.at("scale_source").get<std::string>());
    get("predictor_hidden", cfg.predictor_hidden);
    get("critic_hidden", cfg.critic_hidden);
    if (j.contains("activation"))
      cfg.activation = nn::parse_activation(j.at("activation").get<std::string>());
    get("slope", cfg.slope);
    get("adam_beta1", cfg.adam_beta1);
    get("adam_beta2", cfg.adam_beta2);
    get("adam_eps", cfg.adam_eps);
    get("n_critic", cfg.n_critic);
    get("checkpoint_every", cfg.checkpoint_every);
    if (j.contains("checkpoint_dir"))
      cfg.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    if (j.contains("karcher")) {
      const json &k = j.at("karcher");
      if (k.contains("tol"))
        k.at("tol").get_to(cfg.karcher.tol);
      if (k.contains("max_iter"))
        k.at("max_iter").get_to(cfg.karcher.max_iter);
      if (k.contains("step"))
        k.at("step").get_to(cfg.karcher.step);
    }
    if (j.contains("topology")) {
      const json &t = j.at("topology");
      SkeletonTopology topo;
      t.at("joints").get_to(topo.joints);
      if (t.contains("hip"))
        t.at("hip").get_to(topo.hip);
      for (const json &b : t.at("bones")) {
        if (!b.is_array() || b.size() != 2)
          fail(ErrorKind::parse, "each bone must be a [parent, child] pair");
        topo.bones.push_back({b[0].get<std::size_t>(), b[1].get<std::size_t>()});
      }
      cfg.topology = std::move(topo);
    }
  } catch (const json::exception &e) {
    fail(ErrorKind::parse, std::string("invalid training option: ") + e.what());
  }
  return cfg;
}

nn::MlpSpec predictor_spec(const TrainConfig &cfg) {
  const std::size_t n = 3 * cfg.topology.joints;
  nn::MlpSpec spec;
  spec.widths.push_back((cfg.prior_len - 1) * n);
  spec.widths.insert(spec.widths.end(), cfg.predictor_hidden.begin(),
                     cfg.predictor_hidden.end());
  spec.widths.push_back(cfg.future_len() * n);
  spec.hidden = cfg.activation;
  spec.slope = cfg.slope;
  return spec;
}

nn::MlpSpec critic_spec(const TrainConfig &cfg) {
  const std::size_t n = 3 * cfg.topology.joints;
  nn::MlpSpec spec;
  spec.widths.push_back(cfg.future_len() * n);
  spec.widths.insert(spec.widths.end(), cfg.critic_hidden.begin(),
                     cfg.critic_hidden.end());
  spec.widths.push_back(1);
  spec.hidden = cfg.activation;
  spec.slope = cfg.slope;
  return spec;
}

TrainState init_state(const TrainConfig &cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  TrainState s;
  s.predictor_spec = predictor_spec(cfg);
  s.critic_spec = critic_spec(cfg);
  s.predictor = nn::init_params(s.predictor_spec, root.next_u64());
  s.critic = nn::init_params(s.critic_spec, root.next_u64());
  s.predictor_opt = nn::AdamState::for_params(s.predictor);
  s.critic_opt = nn::AdamState::for_params(s.critic);
  s.rng = Rng(root.next_u64());
  return s;
}

} // namespace mawgan
