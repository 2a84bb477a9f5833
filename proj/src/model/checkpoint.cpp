// SPDX-License-Identifier: Apache-2.0

#include <map>

#include "mawgan/model.hpp"
#include "mawgan/nn/param_file.hpp"

namespace mawgan {

using nlohmann::json;

namespace {

constexpr const char *kKind = "mawgan-train";
constexpr int kVersion = 1;

void put_set(std::vector<nn::NamedTensor> &out, const std::string &prefix,
             const nn::ParamSet &params) {
  for (const nn::NamedTensor &p : params)
    out.push_back({prefix + p.name, p.value});
}

void put_moments(std::vector<nn::NamedTensor> &out, const std::string &prefix,
                 const nn::ParamSet &params, const nn::AdamState &st) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back({prefix + "m/" + params[i].name, st.m[i]});
    out.push_back({prefix + "v/" + params[i].name, st.v[i]});
  }
}

json mean_info(const FrechetMean &m) {
  return {{"residual", m.residual}, {"iterations", m.iterations}};
}

class TensorIndex {
public:
  TensorIndex(std::vector<nn::NamedTensor> tensors, std::string source)
      : source_(std::move(source)) {
    for (auto &t : tensors)
      if (!map_.emplace(t.name, std::move(t.value)).second)
        fail(ErrorKind::parse, source_ + ": duplicate tensor '" + t.name + "'");
  }

  Tensor take(const std::string &name) {
    auto it = map_.find(name);
    if (it == map_.end())
      fail(ErrorKind::parse, source_ + ": missing tensor '" + name + "'");
    Tensor t = std::move(it->second);
    map_.erase(it);
    return t;
  }

  nn::ParamSet take_set(const std::string &prefix, const nn::MlpSpec &spec) {
    nn::ParamSet shape = nn::init_params(spec, 0);
    nn::ParamSet out;
    for (const nn::NamedTensor &p : shape)
      out.add(p.name, take(prefix + p.name));
    nn::check_params(spec, out);
    return out;
  }

  nn::AdamState take_moments(const std::string &prefix, const nn::ParamSet &params,
                             std::uint64_t step) {
    nn::AdamState st;
    st.step = step;
    for (const nn::NamedTensor &p : params) {
      st.m.push_back(take(prefix + "m/" + p.name));
      st.v.push_back(take(prefix + "v/" + p.name));
      if (!st.m.back().same_shape(p.value) || !st.v.back().same_shape(p.value))
        fail(ErrorKind::parse, source_ + ": optimizer moments for '" + p.name +
                                   "' have the wrong shape");
    }
    return st;
  }

  void expect_empty() const {
    if (!map_.empty())
      fail(ErrorKind::parse, source_ + ": unexpected tensor '" + map_.begin()->first + "'");
  }

private:
  std::map<std::string, Tensor> map_;
  std::string source_;
};

} // namespace

void save_checkpoint(const std::filesystem::path &path, const TrainState &state,
                     const TrainConfig &cfg) {
  if (!state.ready())
    fail(ErrorKind::state, "save_checkpoint: state has no references");
  json config = to_json(cfg);
  // Output locations are not part of the model.
  config.erase("checkpoint_dir");
  nn::ParamFile file;
  file.header = {{"kind", kKind},
                 {"version", kVersion},
                 {"config", config},
                 {"predictor_spec", nn::to_json(state.predictor_spec)},
                 {"critic_spec", nn::to_json(state.critic_spec)},
                 {"seed", cfg.seed},
                 {"epoch", state.epoch},
                 {"rng", state.rng.serialize()},
                 {"predictor_adam_step", state.predictor_opt.step},
                 {"critic_adam_step", state.critic_opt.step},
                 {"mu", mean_info(state.mu)},
                 {"mu_prior", mean_info(state.mu_prior)}};
  auto &t = file.tensors;
  put_set(t, "predictor/", state.predictor);
  put_set(t, "critic/", state.critic);
  put_moments(t, "adam/predictor/", state.predictor, state.predictor_opt);
  put_moments(t, "adam/critic/", state.critic, state.critic_opt);
  t.push_back({"mu", state.mu.mu.samples});
  t.push_back({"mu_prior", state.mu_prior.mu.samples});
  t.push_back({"future_scale", Tensor::scalar(state.future_scale)});
  nn::save_param_file(path, file);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  nn::ParamFile file = nn::load_param_file(path);
  const std::string source = path.string();
  Checkpoint out;
  TrainState &s = out.state;
  const json &h = file.header;
  try {
    if (!h.contains("kind") || h.at("kind").get<std::string>() != kKind)
      fail(ErrorKind::parse, source + ": not a training checkpoint");
    if (h.at("version").get<int>() != kVersion)
      fail(ErrorKind::parse, source + ": unsupported checkpoint version");
    out.config = train_config_from_json(h.at("config"));
    s.predictor_spec = nn::mlp_spec_from_json(h.at("predictor_spec"));
    s.critic_spec = nn::mlp_spec_from_json(h.at("critic_spec"));
    s.epoch = h.at("epoch").get<std::size_t>();
    s.rng.deserialize(h.at("rng").get<std::string>());
    s.mu.residual = h.at("mu").at("residual").get<double>();
    s.mu.iterations = h.at("mu").at("iterations").get<std::size_t>();
    s.mu_prior.residual = h.at("mu_prior").at("residual").get<double>();
    s.mu_prior.iterations = h.at("mu_prior").at("iterations").get<std::size_t>();
    TensorIndex idx(std::move(file.tensors), source);
    s.predictor = idx.take_set("predictor/", s.predictor_spec);
    s.critic = idx.take_set("critic/", s.critic_spec);
    s.predictor_opt = idx.take_moments("adam/predictor/", s.predictor,
                                       h.at("predictor_adam_step").get<std::uint64_t>());
    s.critic_opt = idx.take_moments("adam/critic/", s.critic,
                                    h.at("critic_adam_step").get<std::uint64_t>());
    const double future_dt = 1.0 / static_cast<double>(out.config.future_len());
    const double prior_dt = 1.0 / static_cast<double>(out.config.prior_len - 1);
    s.mu.mu = Srvf{idx.take("mu"), future_dt, true};
    s.mu_prior.mu = Srvf{idx.take("mu_prior"), prior_dt, true};
    s.future_scale = idx.take("future_scale").item();
    idx.expect_empty();
  } catch (const json::exception &e) {
    fail(ErrorKind::parse, source + ": invalid checkpoint header: " + e.what());
  }
  out.config.validate();
  if (s.predictor_spec != predictor_spec(out.config) ||
      s.critic_spec != critic_spec(out.config))
    fail(ErrorKind::parse, source + ": network shapes disagree with the stored configuration");
  return out;
}

} // namespace mawgan
