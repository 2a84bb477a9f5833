// SPDX-License-Identifier: Apache-2.0

#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "mawgan/harness.hpp"

namespace mawgan::harness {

namespace {

// Values given on the command line. Each one, when present, replaces the
// corresponding configuration entry after the config file is read.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> data, output, checkpoint, predictions, eval_csv, action;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, prior_len, total_len, n_critic, checkpoint_every;
  std::optional<double> lr, lambda_gp, error_scale;
  std::optional<std::vector<double>> beta, horizons;
  std::optional<std::string> scale_source;
  std::optional<std::size_t> downsample, window, stride;
  std::optional<double> train_fraction;
  bool no_normalize = false;
  std::optional<std::size_t> subsample, repeats;
  std::optional<std::uint64_t> eval_seed;
  std::optional<std::size_t> plot_sample, plot_joint, plot_axis;
  std::optional<std::size_t> joints, frames, samples;
  std::optional<double> fps;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::vector<std::string>> actions;
};

template <class T, class U> void put(const std::optional<T> &src, U &dst) {
  if (src)
    dst = *src;
}

RunConfig effective_config(const Overrides &o) {
  RunConfig cfg = o.config ? load_run_config(*o.config) : RunConfig{};
  put(o.data, cfg.data_dir);
  put(o.output, cfg.output_dir);
  put(o.checkpoint, cfg.checkpoint);
  put(o.predictions, cfg.predictions);
  put(o.eval_csv, cfg.eval_csv);
  put(o.action, cfg.action);
  put(o.seed, cfg.train.seed);
  put(o.epochs, cfg.train.epochs);
  put(o.batch_size, cfg.train.batch_size);
  put(o.prior_len, cfg.train.prior_len);
  put(o.total_len, cfg.train.total_len);
  put(o.n_critic, cfg.train.n_critic);
  put(o.checkpoint_every, cfg.train.checkpoint_every);
  put(o.lr, cfg.train.lr);
  put(o.lambda_gp, cfg.train.lambda_gp);
  put(o.error_scale, cfg.error_scale);
  if (o.beta) {
    if (o.beta->size() != 4)
      fail(ErrorKind::argument, "--beta takes four weights");
    std::copy(o.beta->begin(), o.beta->end(), cfg.train.beta.begin());
  }
  put(o.horizons, cfg.horizons_ms);
  if (o.scale_source)
    cfg.train.scale_source = parse_scale_source(*o.scale_source);
  put(o.downsample, cfg.preprocess.downsample);
  put(o.window, cfg.preprocess.window);
  put(o.stride, cfg.preprocess.stride);
  put(o.train_fraction, cfg.preprocess.train_fraction);
  if (o.no_normalize)
    cfg.preprocess.normalize = false;
  put(o.subsample, cfg.evaluate.subsample);
  put(o.repeats, cfg.evaluate.repeats);
  put(o.eval_seed, cfg.evaluate.seed);
  put(o.plot_sample, cfg.plot.sample);
  if (o.plot_joint)
    cfg.plot.joint = *o.plot_joint;
  put(o.plot_axis, cfg.plot.axis);
  put(o.joints, cfg.synth.joints);
  put(o.frames, cfg.synth.frames);
  put(o.samples, cfg.synth.samples);
  put(o.fps, cfg.synth.fps);
  put(o.synth_seed, cfg.synth_seed);
  put(o.actions, cfg.synth_actions);
  return cfg;
}

void common_options(CLI::App &cmd, Overrides &o) {
  cmd.add_option("-c,--config", o.config, "JSON configuration file (flags override it)")
      ->check(CLI::ExistingFile);
  cmd.add_option("-o,--output", o.output, "Output directory");
}

void data_options(CLI::App &cmd, Overrides &o) {
  cmd.add_option("-d,--data", o.data, "Dataset directory");
  cmd.add_option("--action", o.action, "Only use sequences with this label");
}

void split_options(CLI::App &cmd, Overrides &o) {
  cmd.add_option("--prior-len", o.prior_len, "Observed frames tau");
  cmd.add_option("--total-len", o.total_len, "Frames per sequence T");
}

void horizon_options(CLI::App &cmd, Overrides &o) {
  cmd.add_option("--horizons", o.horizons, "Report horizons in ms, ascending")->delimiter(',');
  cmd.add_option("--error-scale", o.error_scale, "Factor applied to reported errors");
}

} // namespace

int run(std::span<const std::string> args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Motion prediction on the SRVF hypersphere", "mawgan"};
  app.require_subcommand(1);
  Overrides o;

  auto *synth = app.add_subcommand("synth", "Write a synthetic sinusoid dataset");
  common_options(*synth, o);
  synth->add_option("--joints", o.joints);
  synth->add_option("--frames", o.frames);
  synth->add_option("--samples", o.samples, "Sequences per action");
  synth->add_option("--fps", o.fps);
  synth->add_option("--seed", o.synth_seed);
  synth->add_option("--actions", o.actions, "Action labels")->delimiter(',');

  auto *prep = app.add_subcommand("preprocess", "Downsample, window and normalize a dataset");
  common_options(*prep, o);
  data_options(*prep, o);
  prep->add_option("--downsample", o.downsample);
  prep->add_option("--window", o.window);
  prep->add_option("--stride", o.stride);
  prep->add_option("--train-fraction", o.train_fraction);
  prep->add_flag("--no-normalize", o.no_normalize);

  auto *train = app.add_subcommand("train", "Train the predictor and critic");
  common_options(*train, o);
  data_options(*train, o);
  split_options(*train, o);
  train->add_option("--resume", o.checkpoint, "Continue from this checkpoint");
  train->add_option("--seed", o.seed);
  train->add_option("--epochs", o.epochs);
  train->add_option("--batch-size", o.batch_size);
  train->add_option("--lr", o.lr);
  train->add_option("--lambda-gp", o.lambda_gp);
  train->add_option("--beta", o.beta, "Loss weights b1,b2,b3,b4")->delimiter(',');
  train->add_option("--n-critic", o.n_critic);
  train->add_option("--scale-source", o.scale_source, "mean-future-length or prior-length");
  train->add_option("--checkpoint-every", o.checkpoint_every);

  auto *pred = app.add_subcommand("predict", "Predict futures from the first tau frames");
  common_options(*pred, o);
  data_options(*pred, o);
  pred->add_option("--checkpoint", o.checkpoint);
  pred->add_option("--plot-sample", o.plot_sample);
  pred->add_option("--plot-joint", o.plot_joint, "Write prediction.svg for this joint");
  pred->add_option("--plot-axis", o.plot_axis, "0, 1 or 2");

  auto *eval = app.add_subcommand("evaluate", "Per-action MPJPE of model and baseline");
  common_options(*eval, o);
  data_options(*eval, o);
  horizon_options(*eval, o);
  eval->add_option("--checkpoint", o.checkpoint);
  eval->add_option("--predictions", o.predictions, "Use stored predictions instead");
  eval->add_option("--subsample", o.subsample, "Sequences drawn per action and repeat");
  eval->add_option("--repeats", o.repeats);
  eval->add_option("--seed", o.eval_seed);

  auto *base = app.add_subcommand("baseline", "Zero-velocity baseline MPJPE");
  common_options(*base, o);
  data_options(*base, o);
  split_options(*base, o);
  horizon_options(*base, o);

  auto *smooth = app.add_subcommand("smoothness", "Mean frame-to-frame displacement");
  common_options(*smooth, o);
  data_options(*smooth, o);
  smooth->add_option("--checkpoint", o.checkpoint);
  smooth->add_option("--predictions", o.predictions);
  smooth->add_option("--error-scale", o.error_scale);

  auto *report = app.add_subcommand("report", "Render eval.csv as a table");
  common_options(*report, o);
  report->add_option("--eval-csv", o.eval_csv);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError &e) {
    // Subcommand help requests surface here too.
    if (e.get_exit_code() == 0) {
      for (CLI::App *sub : app.get_subcommands())
        out << sub->help();
      return exit_ok;
    }
    err << "mawgan: " << e.what() << '\n';
    return exit_usage;
  }

  try {
    const RunConfig cfg = effective_config(o);
    if (synth->parsed())
      cmd_synth(cfg);
    else if (prep->parsed())
      cmd_preprocess(cfg);
    else if (train->parsed())
      cmd_train(cfg);
    else if (pred->parsed())
      cmd_predict(cfg);
    else if (eval->parsed())
      out << render_table(cmd_evaluate(cfg), 1.0);
    else if (base->parsed())
      cmd_baseline(cfg);
    else if (smooth->parsed()) {
      for (const auto &r : cmd_smoothness(cfg))
        out << r.action << ": ground truth " << r.ground_truth << ", generated " << r.generated
            << '\n';
    } else if (report->parsed())
      out << cmd_report(cfg);
  } catch (const Error &e) {
    err << "mawgan: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception &e) {
    err << "mawgan: " << e.what() << '\n';
    return exit_data;
  }
  return exit_ok;
}

} // namespace mawgan::harness
