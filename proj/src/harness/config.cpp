// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "../format.hpp"
#include "mawgan/harness.hpp"

namespace mawgan::harness {

using nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
  case ErrorKind::argument:
  case ErrorKind::alignment:
    return exit_usage;
  case ErrorKind::parse:
  case ErrorKind::shape:
  case ErrorKind::degenerate:
  case ErrorKind::domain:
  case ErrorKind::state:
  case ErrorKind::io:
    return exit_data;
  case ErrorKind::singularity:
  case ErrorKind::convergence:
  case ErrorKind::numeric:
  case ErrorKind::capability:
    return exit_numeric;
  }
  return exit_numeric;
}

void RunConfig::validate() const {
  if (horizons_ms.empty())
    fail(ErrorKind::argument, "at least one report horizon is required");
  for (double h : horizons_ms)
    if (!(h > 0.0) || !std::isfinite(h))
      fail(ErrorKind::argument, "horizons must be positive");
  if (!std::is_sorted(horizons_ms.begin(), horizons_ms.end()) ||
      std::adjacent_find(horizons_ms.begin(), horizons_ms.end()) != horizons_ms.end())
    fail(ErrorKind::argument, "horizons must be strictly ascending");
  if (!(error_scale > 0.0) || !std::isfinite(error_scale))
    fail(ErrorKind::argument, "error_scale must be positive");
  if (preprocess.downsample == 0 || preprocess.window < 2 || preprocess.stride == 0)
    fail(ErrorKind::argument, "preprocess needs downsample >= 1, window >= 2, stride >= 1");
  if (!(preprocess.train_fraction >= 0.0 && preprocess.train_fraction <= 1.0))
    fail(ErrorKind::argument, "train_fraction must lie in [0, 1]");
  if (evaluate.repeats == 0)
    fail(ErrorKind::argument, "repeats must be at least 1");
  if (synth_actions.empty())
    fail(ErrorKind::argument, "synth needs at least one action label");
}

json topology_to_json(const SkeletonTopology &t) {
  json bones = json::array();
  for (const Bone &b : t.bones)
    bones.push_back({b.parent, b.child});
  return {{"joints", t.joints}, {"hip", t.hip}, {"bones", bones}};
}

SkeletonTopology topology_from_json(const json &j) {
  // The training configuration owns the parsing rules.
  return train_config_from_json(json{{"topology", j}}).topology;
}

void save_topology(const std::filesystem::path &dir, const SkeletonTopology &t) {
  std::ofstream out(dir / kTopologyName);
  if (!out)
    fail(ErrorKind::io, "cannot write " + (dir / kTopologyName).string());
  out << topology_to_json(t).dump(2) << '\n';
}

SkeletonTopology load_topology(const std::filesystem::path &dir) {
  const auto path = dir / kTopologyName;
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::io, "cannot open " + path.string() +
                            " (give the skeleton in the configuration instead)");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
  SkeletonTopology t = topology_from_json(j);
  t.validate();
  return t;
}

json to_json(const RunConfig &cfg) {
  return {
      {"train", to_json(cfg.train)},
      {"data", cfg.data_dir.string()},
      {"output", cfg.output_dir.string()},
      {"checkpoint", cfg.checkpoint.string()},
      {"predictions", cfg.predictions.string()},
      {"eval_csv", cfg.eval_csv.string()},
      {"horizons_ms", cfg.horizons_ms},
      {"error_scale", cfg.error_scale},
      {"action", cfg.action},
      {"preprocess",
       {{"downsample", cfg.preprocess.downsample},
        {"window", cfg.preprocess.window},
        {"stride", cfg.preprocess.stride},
        {"normalize", cfg.preprocess.normalize},
        {"train_fraction", cfg.preprocess.train_fraction}}},
      {"evaluate",
       {{"subsample", cfg.evaluate.subsample},
        {"repeats", cfg.evaluate.repeats},
        {"seed", cfg.evaluate.seed}}},
      {"plot",
       {{"sample", cfg.plot.sample},
        {"joint", cfg.plot.joint ? json(*cfg.plot.joint) : json(nullptr)},
        {"axis", cfg.plot.axis}}},
      {"synth",
       {{"joints", cfg.synth.joints},
        {"frames", cfg.synth.frames},
        {"fps", cfg.synth.fps},
        {"samples", cfg.synth.samples},
        {"amplitude", {cfg.synth.amplitude.lo, cfg.synth.amplitude.hi}},
        {"frequency", {cfg.synth.frequency.lo, cfg.synth.frequency.hi}},
        {"phase", {cfg.synth.phase.lo, cfg.synth.phase.hi}},
        {"drift", {cfg.synth.drift.lo, cfg.synth.drift.hi}},
        {"seed", cfg.synth_seed},
        {"actions", cfg.synth_actions}}},
  };
}

namespace {

void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &where) {
  if (!j.is_object())
    fail(ErrorKind::parse, where + " must be a JSON object");
  for (const auto &[key, value] : j.items())
    if (!known.contains(key))
      fail(ErrorKind::parse, "unknown option '" + key + "' in " + where);
}

template <class T> void take(const json &j, const char *key, T &dst) {
  if (j.contains(key))
    j.at(key).get_to(dst);
}

void take_path(const json &j, const char *key, std::filesystem::path &dst) {
  if (j.contains(key))
    dst = j.at(key).get<std::string>();
}

void take_range(const json &j, const char *key, Range &dst) {
  if (!j.contains(key))
    return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2)
    fail(ErrorKind::parse, std::string("synth.") + key + " must be [lo, hi]");
  dst = {v[0], v[1]};
}

} // namespace

RunConfig run_config_from_json(const json &j, RunConfig cfg) {
  reject_unknown(j,
                 {"train", "data", "output", "checkpoint", "predictions", "eval_csv",
                  "horizons_ms", "error_scale", "action", "preprocess", "evaluate", "plot",
                  "synth"},
                 "configuration");
  try {
    if (j.contains("train"))
      cfg.train = train_config_from_json(j.at("train"), cfg.train);
    take_path(j, "data", cfg.data_dir);
    take_path(j, "output", cfg.output_dir);
    take_path(j, "checkpoint", cfg.checkpoint);
    take_path(j, "predictions", cfg.predictions);
    take_path(j, "eval_csv", cfg.eval_csv);
    take(j, "horizons_ms", cfg.horizons_ms);
    take(j, "error_scale", cfg.error_scale);
    take(j, "action", cfg.action);
    if (j.contains("preprocess")) {
      const json &p = j.at("preprocess");
      reject_unknown(p, {"downsample", "window", "stride", "normalize", "train_fraction"},
                     "preprocess");
      take(p, "downsample", cfg.preprocess.downsample);
      take(p, "window", cfg.preprocess.window);
      take(p, "stride", cfg.preprocess.stride);
      take(p, "normalize", cfg.preprocess.normalize);
      take(p, "train_fraction", cfg.preprocess.train_fraction);
    }
    if (j.contains("evaluate")) {
      const json &e = j.at("evaluate");
      reject_unknown(e, {"subsample", "repeats", "seed"}, "evaluate");
      take(e, "subsample", cfg.evaluate.subsample);
      take(e, "repeats", cfg.evaluate.repeats);
      take(e, "seed", cfg.evaluate.seed);
    }
    if (j.contains("plot")) {
      const json &p = j.at("plot");
      reject_unknown(p, {"sample", "joint", "axis"}, "plot");
      take(p, "sample", cfg.plot.sample);
      if (p.contains("joint"))
        cfg.plot.joint = p.at("joint").is_null()
                             ? std::nullopt
                             : std::optional<std::size_t>(p.at("joint").get<std::size_t>());
      take(p, "axis", cfg.plot.axis);
    }
    if (j.contains("synth")) {
      const json &s = j.at("synth");
      reject_unknown(s,
                     {"joints", "frames", "fps", "samples", "amplitude", "frequency", "phase",
                      "drift", "seed", "actions"},
                     "synth");
      take(s, "joints", cfg.synth.joints);
      take(s, "frames", cfg.synth.frames);
      take(s, "fps", cfg.synth.fps);
      take(s, "samples", cfg.synth.samples);
      take_range(s, "amplitude", cfg.synth.amplitude);
      take_range(s, "frequency", cfg.synth.frequency);
      take_range(s, "phase", cfg.synth.phase);
      take_range(s, "drift", cfg.synth.drift);
      take(s, "seed", cfg.synth_seed);
      take(s, "actions", cfg.synth_actions);
    }
  } catch (const json::exception &e) {
    fail(ErrorKind::parse, std::string("invalid configuration value: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path &path, RunConfig base) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::io, "cannot open configuration " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, std::move(base));
}

std::size_t horizon_to_frames(double ms, double fps) {
  if (!(ms > 0.0) || !(fps > 0.0) || !std::isfinite(ms) || !std::isfinite(fps))
    fail(ErrorKind::argument, "horizon and frame rate must be positive");
  const double frames = ms * fps / 1000.0;
  const double nearest = std::round(frames);
  if (nearest >= 1.0 && std::abs(frames - nearest) <= 1e-6 * std::max(1.0, frames))
    return static_cast<std::size_t>(nearest);
  std::ostringstream msg;
  msg << "horizon " << detail::format_number(ms) << " ms is not a whole number of frames at "
      << detail::format_number(fps) << " fps; valid horizons are multiples of "
      << detail::format_number(1000.0 / fps) << " ms:";
  const std::size_t shown = std::max<std::size_t>(5, static_cast<std::size_t>(frames) + 2);
  for (std::size_t k = 1; k <= std::min<std::size_t>(shown, 30); ++k)
    msg << ' ' << detail::format_number(static_cast<double>(k) * 1000.0 / fps);
  fail(ErrorKind::alignment, msg.str());
}

} // namespace mawgan::harness
