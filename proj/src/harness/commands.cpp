// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "../format.hpp"
#include "mawgan/harness.hpp"
#include "mawgan/rng.hpp"

namespace mawgan::harness {

namespace fs = std::filesystem;

namespace {

// MAWGAN_VERBOSE: 0 silent, 1 progress (default), 2 per-iteration detail.
int verbosity() {
  const char *v = std::getenv("MAWGAN_VERBOSE");
  if (!v || !*v)
    return 1;
  return std::atoi(v);
}

void note(int level, const std::string &msg) {
  if (verbosity() >= level)
    std::clog << msg << '\n';
}

std::string file_stem_for(const std::string &label) {
  std::string out;
  for (char c : label)
    out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
  return out.empty() ? "unlabeled" : out;
}

void require_path(const fs::path &p, const char *what) {
  if (p.empty())
    fail(ErrorKind::argument, std::string("no ") + what + " given");
  if (!fs::exists(p))
    fail(ErrorKind::io, std::string(what) + " '" + p.string() + "' does not exist");
}

void prepare_output(const RunConfig &cfg) {
  if (cfg.output_dir.empty())
    fail(ErrorKind::argument, "no output directory given");
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec)
    fail(ErrorKind::io, "cannot create " + cfg.output_dir.string() + ": " + ec.message());
  std::ofstream out(cfg.output_dir / "effective_config.json");
  if (!out)
    fail(ErrorKind::io, "cannot write into " + cfg.output_dir.string());
  out << to_json(cfg).dump(2) << '\n';
}

std::ofstream open_output(const fs::path &path) {
  std::ofstream out(path);
  if (!out)
    fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

// Labels in order of first appearance, each with its sequence indices.
std::vector<std::pair<std::string, std::vector<std::size_t>>>
group_by_label(std::span<const MotionSequence> seqs) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto &g) { return g.first == seqs[i].label(); });
    if (it == groups.end())
      groups.push_back({seqs[i].label(), {i}});
    else
      it->second.push_back(i);
  }
  return groups;
}

void write_dataset(const fs::path &dir, std::span<const MotionSequence> seqs,
                   const SkeletonTopology &topology) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<ManifestEntry> manifest;
  for (const auto &[label, idx] : group_by_label(seqs)) {
    std::vector<MotionSequence> part;
    for (std::size_t i : idx)
      part.push_back(seqs[i]);
    const std::string file = file_stem_for(label) + ".txt";
    save_sequences(dir / file, part);
    manifest.push_back({file, label});
  }
  write_manifest(dir, manifest);
  save_topology(dir, topology);
}

struct Horizon {
  double ms;
  std::size_t frames;
};

// Converts every horizon before any work starts; horizons longer than the
// predicted span are dropped with a note.
std::vector<Horizon> resolve_horizons(const RunConfig &cfg, double fps, std::size_t future_len) {
  std::vector<Horizon> out;
  for (double ms : cfg.horizons_ms) {
    const std::size_t f = horizon_to_frames(ms, fps);
    if (f > future_len) {
      note(1, "skipping horizon " + detail::format_number(ms) + " ms: needs " +
                  std::to_string(f) + " frames, " + std::to_string(future_len) +
                  " are predicted");
      continue;
    }
    out.push_back({ms, f});
  }
  if (out.empty())
    fail(ErrorKind::argument, "no requested horizon fits within the " +
                                  std::to_string(future_len) + " predicted frames");
  return out;
}

double common_fps(std::span<const MotionSequence> seqs) {
  const double fps = seqs.front().fps();
  for (const auto &s : seqs)
    if (s.fps() != fps)
      fail(ErrorKind::shape, "sequences mix frame rates " + detail::format_number(fps) +
                                 " and " + detail::format_number(s.fps()));
  return fps;
}

// Ground-truth sequences with their predicted futures.
struct Evaluation {
  DatasetSplit data;
  std::vector<MotionSequence> predicted;
  TrainConfig train;
};

Evaluation gather_predictions(RunConfig &cfg) {
  require_path(cfg.data_dir, "dataset directory");
  Evaluation ev;
  std::optional<Checkpoint> ckpt;
  if (cfg.predictions.empty()) {
    require_path(cfg.checkpoint, "checkpoint");
    ckpt = load_checkpoint(cfg.checkpoint);
    ev.train = ckpt->config;
    cfg.train.topology = ev.train.topology;
    cfg.train.prior_len = ev.train.prior_len;
    cfg.train.total_len = ev.train.total_len;
  } else {
    require_path(cfg.predictions, "predictions file");
    ev.train = cfg.train;
  }
  auto seqs = load_run_dataset(cfg, cfg.data_dir);
  ev.train.topology = cfg.train.topology;
  ev.data = make_split(seqs, ev.train.prior_len, ev.train.total_len);
  if (ckpt) {
    for (const auto &[prior, future] : ev.data.samples)
      ev.predicted.push_back(predict(prior, ckpt->state, ckpt->config));
  } else {
    ev.predicted = load_sequences(cfg.predictions, cfg.train.topology);
    if (!cfg.action.empty())
      std::erase_if(ev.predicted, [&](const MotionSequence &s) { return s.label() != cfg.action; });
    if (ev.predicted.size() != ev.data.samples.size())
      fail(ErrorKind::shape, "predictions file holds " + std::to_string(ev.predicted.size()) +
                                 " sequences, dataset has " +
                                 std::to_string(ev.data.samples.size()));
    for (std::size_t i = 0; i < ev.predicted.size(); ++i)
      if (ev.predicted[i].frames() < ev.data.samples[i].second.frames())
        fail(ErrorKind::shape, "prediction " + std::to_string(i) + " has " +
                                   std::to_string(ev.predicted[i].frames()) + " frames, expected " +
                                   std::to_string(ev.data.samples[i].second.frames()));
  }
  return ev;
}

} // namespace

std::vector<MotionSequence> load_run_dataset(RunConfig &cfg, const fs::path &dir) {
  require_path(dir, "dataset directory");
  if (cfg.train.topology.joints == 0)
    cfg.train.topology = load_topology(dir);
  auto seqs = load_dataset(dir, cfg.train.topology);
  if (!cfg.action.empty())
    std::erase_if(seqs, [&](const MotionSequence &s) { return s.label() != cfg.action; });
  if (seqs.empty())
    fail(ErrorKind::parse, "no sequences in " + dir.string() +
                               (cfg.action.empty() ? "" : " with label '" + cfg.action + "'"));
  return seqs;
}

void cmd_synth(RunConfig cfg) {
  cfg.validate();
  SkeletonTopology topo = cfg.train.topology.joints == 0
                              ? SkeletonTopology::chain(cfg.synth.joints)
                              : cfg.train.topology;
  if (topo.joints != cfg.synth.joints)
    fail(ErrorKind::argument, "synth joints do not match the configured skeleton");
  cfg.train.topology = topo;
  prepare_output(cfg);
  Rng seeds(cfg.synth_seed);
  std::vector<MotionSequence> all;
  for (const std::string &action : cfg.synth_actions) {
    SynthSpec spec = cfg.synth;
    spec.label = action;
    auto seqs = synthesize_dataset(spec, seeds.next_u64());
    all.insert(all.end(), seqs.begin(), seqs.end());
  }
  write_dataset(cfg.output_dir, all, topo);
  note(1, "wrote " + std::to_string(all.size()) + " sequences to " + cfg.output_dir.string());
}

void cmd_preprocess(RunConfig cfg) {
  cfg.validate();
  auto seqs = load_run_dataset(cfg, cfg.data_dir);
  prepare_output(cfg);
  const PreprocessOptions &p = cfg.preprocess;
  std::vector<MotionSequence> train, test;
  for (const auto &[label, idx] : group_by_label(seqs)) {
    const auto n_train = static_cast<std::size_t>(
        std::llround(p.train_fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      MotionSequence s = seqs[idx[j]];
      if (p.downsample > 1)
        s = downsample(s, p.downsample);
      for (MotionSequence &w : window(s, p.window, p.stride)) {
        if (p.normalize)
          w = normalize(w, cfg.train.topology);
        (j < n_train ? train : test).push_back(std::move(w));
      }
    }
  }
  if (train.empty() && test.empty())
    fail(ErrorKind::argument, "no sequence is long enough for windows of " +
                                  std::to_string(p.window) + " frames");
  write_dataset(cfg.output_dir / "train", train, cfg.train.topology);
  write_dataset(cfg.output_dir / "test", test, cfg.train.topology);
  note(1, "wrote " + std::to_string(train.size()) + " training and " +
              std::to_string(test.size()) + " test windows");
}

TrainState cmd_train(RunConfig cfg) {
  cfg.validate();
  auto seqs = load_run_dataset(cfg, cfg.data_dir);
  cfg.train.validate();
  if (cfg.train.checkpoint_every > 0 && cfg.train.checkpoint_dir.empty())
    cfg.train.checkpoint_dir = cfg.output_dir;
  const DatasetSplit data = make_split(seqs, cfg.train.prior_len, cfg.train.total_len);
  prepare_output(cfg);

  std::ofstream log = open_output(cfg.output_dir / "train_log.csv");
  write_log_header(log);
  TrainOptions opts;
  if (!cfg.checkpoint.empty()) {
    Checkpoint resume = load_checkpoint(cfg.checkpoint);
    opts.resume = std::move(resume.state);
    note(1, "resuming from epoch " + std::to_string(opts.resume->epoch));
  }
  const int level = verbosity();
  opts.on_iteration = [&](const LogRow &row) {
    write_log_row(log, row);
    if (level >= 2 || (level >= 1 && row.iter == 0 && (row.epoch + 1) % 10 == 0)) {
      std::ostringstream msg;
      msg << "epoch " << row.epoch << " iter " << row.iter << " total " << row.loss.total
          << " w " << row.loss.wasserstein_estimate;
      note(1, msg.str());
    }
  };
  TrainResult result = train(data, cfg.train, std::move(opts));
  log.close();
  if (!log)
    fail(ErrorKind::io, "failed writing the training log");
  save_checkpoint(cfg.output_dir / "checkpoint.bin", result.state, cfg.train);
  note(1, "trained " + std::to_string(result.state.epoch) + " epochs on " +
              std::to_string(data.samples.size()) + " samples");
  return std::move(result.state);
}

void cmd_predict(RunConfig cfg) {
  cfg.validate();
  require_path(cfg.checkpoint, "checkpoint");
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  cfg.train.topology = ckpt.config.topology;
  auto seqs = load_run_dataset(cfg, cfg.data_dir);
  const std::size_t tau = ckpt.config.prior_len;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    if (seqs[i].frames() < tau)
      fail(ErrorKind::shape, "sequence " + std::to_string(i) + " has " +
                                 std::to_string(seqs[i].frames()) + " frames, the model needs " +
                                 std::to_string(tau) + " prior frames");
  if (cfg.plot.joint) {
    if (cfg.plot.sample >= seqs.size())
      fail(ErrorKind::argument, "plot sample " + std::to_string(cfg.plot.sample) +
                                    " out of range (" + std::to_string(seqs.size()) + " sequences)");
    if (*cfg.plot.joint >= cfg.train.topology.joints || cfg.plot.axis > 2)
      fail(ErrorKind::argument, "plot joint or axis out of range");
  }
  prepare_output(cfg);
  std::vector<MotionSequence> out;
  for (const MotionSequence &s : seqs)
    out.push_back(predict(s.slice(0, tau), ckpt.state, ckpt.config));
  save_sequences(cfg.output_dir / "predictions.txt", out);

  if (cfg.plot.joint) {
    const MotionSequence &gt = seqs[cfg.plot.sample];
    const MotionSequence &pred = out[cfg.plot.sample];
    const std::size_t j = *cfg.plot.joint, a = cfg.plot.axis;
    Series truth{"ground truth", "#1f77b4", {}, {}};
    for (std::size_t t = 0; t < gt.frames(); ++t) {
      truth.x.push_back(static_cast<double>(t));
      truth.y.push_back(gt.at(t, j, a));
    }
    // The prediction starts from the last observed pose.
    Series guess{"prediction", "#d62728", {static_cast<double>(tau - 1)},
                 {gt.at(tau - 1, j, a)}};
    for (std::size_t t = 0; t < pred.frames(); ++t) {
      guess.x.push_back(static_cast<double>(tau + t));
      guess.y.push_back(pred.at(t, j, a));
    }
    const Series both[] = {truth, guess};
    static const char *axes[] = {"x", "y", "z"};
    std::ofstream svg = open_output(cfg.output_dir / "prediction.svg");
    svg << render_line_chart(both,
                             "joint " + std::to_string(j) + " " + axes[a] + " (sample " +
                                 std::to_string(cfg.plot.sample) + ")",
                             "frame", std::string(axes[a]) + " coordinate");
  }
  note(1, "wrote " + std::to_string(out.size()) + " predictions");
}

std::vector<EvalRow> cmd_evaluate(RunConfig cfg) {
  cfg.validate();
  Evaluation ev = gather_predictions(cfg);
  std::vector<MotionSequence> gt_all;
  for (const auto &s : ev.data.samples)
    gt_all.push_back(s.first);
  const auto horizons = resolve_horizons(cfg, common_fps(gt_all), ev.train.future_len());
  prepare_output(cfg);

  std::vector<MotionSequence> priors;
  for (const auto &s : ev.data.samples)
    priors.push_back(s.first);
  Rng rng(cfg.evaluate.seed);
  std::vector<EvalReport> reports;
  for (const auto &[label, idx] : group_by_label(priors)) {
    EvalReport rep;
    rep.action = label;
    std::map<double, double> model_sum, base_sum;
    const std::size_t repeats = cfg.evaluate.subsample == 0 ? 1 : cfg.evaluate.repeats;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::vector<std::size_t> pick = idx;
      if (cfg.evaluate.subsample > 0 && cfg.evaluate.subsample < pick.size()) {
        for (std::size_t i = 0; i < cfg.evaluate.subsample; ++i)
          std::swap(pick[i], pick[i + rng.index(pick.size() - i)]);
        pick.resize(cfg.evaluate.subsample);
      }
      for (const Horizon &h : horizons) {
        double m = 0.0, b = 0.0;
        for (std::size_t i : pick) {
          const auto &[prior, future] = ev.data.samples[i];
          m += mpjpe(future, ev.predicted[i], h.frames);
          b += mpjpe(future, zero_velocity_baseline(prior, h.frames), h.frames);
        }
        model_sum[h.ms] += m / static_cast<double>(pick.size());
        base_sum[h.ms] += b / static_cast<double>(pick.size());
      }
    }
    for (const Horizon &h : horizons) {
      rep.mpjpe_at[h.ms] = cfg.error_scale * model_sum[h.ms] / static_cast<double>(repeats);
      rep.baseline_at[h.ms] = cfg.error_scale * base_sum[h.ms] / static_cast<double>(repeats);
    }
    reports.push_back(std::move(rep));
  }
  const auto rows = to_rows(reports);
  std::ofstream out = open_output(cfg.output_dir / "eval.csv");
  write_eval_csv(out, rows);
  note(1, "evaluated " + std::to_string(ev.data.samples.size()) + " sequences");
  return rows;
}

std::vector<BaselineRow> cmd_baseline(RunConfig cfg) {
  cfg.validate();
  auto seqs = load_run_dataset(cfg, cfg.data_dir);
  const DatasetSplit data = make_split(seqs, cfg.train.prior_len, cfg.train.total_len);
  const auto horizons = resolve_horizons(cfg, common_fps(seqs), cfg.train.future_len());
  prepare_output(cfg);
  std::vector<BaselineRow> rows;
  for (const auto &[label, idx] : group_by_label(seqs))
    for (const Horizon &h : horizons) {
      double sum = 0.0;
      for (std::size_t i : idx) {
        const auto &[prior, future] = data.samples[i];
        sum += mpjpe(future, zero_velocity_baseline(prior, h.frames), h.frames);
      }
      rows.push_back({label, h.ms, cfg.error_scale * sum / static_cast<double>(idx.size())});
    }
  std::ofstream out = open_output(cfg.output_dir / "baseline.csv");
  write_baseline_csv(out, rows);
  return rows;
}

std::vector<SmoothnessRow> cmd_smoothness(RunConfig cfg) {
  cfg.validate();
  Evaluation ev = gather_predictions(cfg);
  prepare_output(cfg);
  std::vector<MotionSequence> priors;
  for (const auto &s : ev.data.samples)
    priors.push_back(s.first);
  std::vector<SmoothnessRow> rows;
  for (const auto &[label, idx] : group_by_label(priors)) {
    double g = 0.0, p = 0.0;
    for (std::size_t i : idx) {
      const MotionSequence &future = ev.data.samples[i].second;
      g += smoothness(future);
      p += smoothness(ev.predicted[i].slice(0, future.frames()));
    }
    const double n = static_cast<double>(idx.size());
    rows.push_back({label, cfg.error_scale * g / n, cfg.error_scale * p / n});
  }
  std::ofstream out = open_output(cfg.output_dir / "smoothness.csv");
  write_smoothness_csv(out, rows);
  return rows;
}

std::string cmd_report(RunConfig cfg) {
  cfg.validate();
  fs::path src = cfg.eval_csv.empty() ? cfg.output_dir / "eval.csv" : cfg.eval_csv;
  require_path(src, "evaluation CSV");
  std::ifstream in(src);
  if (!in)
    fail(ErrorKind::io, "cannot open " + src.string());
  const auto rows = read_eval_csv(in);
  if (rows.empty())
    fail(ErrorKind::parse, src.string() + " holds no results");
  // Values in eval.csv are already scaled.
  const std::string table = render_table(rows, 1.0);
  prepare_output(cfg);
  std::ofstream out = open_output(cfg.output_dir / "report.txt");
  out << table;
  return table;
}

namespace {

const std::string &csv_label(const std::string &label) {
  if (label.find_first_of(",\n") != std::string::npos)
    fail(ErrorKind::argument, "action label may not contain ',' or newlines");
  return label;
}

} // namespace

void write_baseline_csv(std::ostream &out, std::span<const BaselineRow> rows) {
  out << "action,horizon_ms,baseline_err\n";
  for (const auto &r : rows)
    out << csv_label(r.action) << ',' << detail::format_number(r.horizon_ms) << ','
        << detail::format_number(r.baseline_err) << '\n';
}

void write_smoothness_csv(std::ostream &out, std::span<const SmoothnessRow> rows) {
  out << "action,ground_truth,generated\n";
  for (const auto &r : rows)
    out << csv_label(r.action) << ',' << detail::format_number(r.ground_truth) << ','
        << detail::format_number(r.generated) << '\n';
}

namespace {

// Rows of `n` fields: the first is text, the rest numbers.
std::vector<std::pair<std::string, std::vector<double>>>
read_csv(std::istream &in, std::size_t n, const char *what) {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (lineno == 1 || line.empty())
      continue;
    const auto f = detail::split(line, ',');
    if (f.size() != n)
      fail(ErrorKind::parse, std::string(what) + " line " + std::to_string(lineno) +
                                 ": expected " + std::to_string(n) + " fields");
    std::vector<double> v;
    for (std::size_t i = 1; i < n; ++i) {
      auto x = detail::parse_number(f[i]);
      if (!x)
        fail(ErrorKind::parse, std::string(what) + " line " + std::to_string(lineno) +
                                   ": field " + std::to_string(i + 1) + " is not a number");
      v.push_back(*x);
    }
    rows.push_back({std::string(f[0]), std::move(v)});
  }
  return rows;
}

} // namespace

std::vector<BaselineRow> read_baseline_csv(std::istream &in) {
  std::vector<BaselineRow> out;
  for (auto &[a, v] : read_csv(in, 3, "baseline CSV"))
    out.push_back({a, v[0], v[1]});
  return out;
}

std::vector<SmoothnessRow> read_smoothness_csv(std::istream &in) {
  std::vector<SmoothnessRow> out;
  for (auto &[a, v] : read_csv(in, 3, "smoothness CSV"))
    out.push_back({a, v[0], v[1]});
  return out;
}

std::string render_table(std::span<const EvalRow> rows, double error_scale) {
  std::vector<std::string> actions;
  std::vector<double> horizons;
  for (const auto &r : rows) {
    if (std::find(actions.begin(), actions.end(), r.action) == actions.end())
      actions.push_back(r.action);
    if (std::find(horizons.begin(), horizons.end(), r.horizon_ms) == horizons.end())
      horizons.push_back(r.horizon_ms);
  }
  std::sort(horizons.begin(), horizons.end());
  auto lookup = [&](const std::string &a, double h, bool model) -> std::optional<double> {
    for (const auto &r : rows)
      if (r.action == a && r.horizon_ms == h)
        return error_scale * (model ? r.model_err : r.baseline_err);
    return std::nullopt;
  };
  std::size_t name_w = 14;
  for (const auto &a : actions)
    name_w = std::max(name_w, a.size());
  auto cell = [](std::optional<double> v) {
    char buf[32];
    if (v)
      std::snprintf(buf, sizeof buf, "%10.4f", *v);
    else
      std::snprintf(buf, sizeof buf, "%10s", "-");
    return std::string(buf);
  };
  auto pad = [&](std::string s) {
    s.resize(std::max(s.size(), name_w), ' ');
    return s;
  };
  std::ostringstream os;
  for (const auto &a : actions) {
    os << pad(a);
    for (double h : horizons) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%8sms", detail::format_number(h).c_str());
      os << buf;
    }
    os << '\n' << pad("zero-velocity");
    for (double h : horizons)
      os << cell(lookup(a, h, false));
    os << '\n' << pad("model");
    for (double h : horizons)
      os << cell(lookup(a, h, true));
    os << "\n\n";
  }
  if (actions.size() > 1) {
    os << pad("average");
    for (double h : horizons) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%8sms", detail::format_number(h).c_str());
      os << buf;
    }
    for (bool model : {false, true}) {
      os << '\n' << pad(model ? "model" : "zero-velocity");
      for (double h : horizons) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto &a : actions)
          if (auto v = lookup(a, h, model)) {
            sum += *v;
            ++n;
          }
        os << cell(n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt);
      }
    }
    os << '\n';
  }
  return os.str();
}

} // namespace mawgan::harness
