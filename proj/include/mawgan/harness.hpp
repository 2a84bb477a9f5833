// SPDX-License-Identifier: Apache-2.0
//
// Command layer behind the `mawgan` executable. Every command reads a
// RunConfig, validates its inputs up front and writes plain-text outputs
// (CSV, the motion format, SVG) into the output directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mawgan/metrics.hpp"
#include "mawgan/model.hpp"
#include "mawgan/motion.hpp"

namespace mawgan::harness {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numeric = 3 };

/// Maps an error class onto the exit code reported for it.
int exit_code_for(ErrorKind kind) noexcept;

struct PreprocessOptions {
  std::size_t downsample = 1;
  std::size_t window = 20; ///< frames per output sequence
  std::size_t stride = 10;
  bool normalize = true;
  /// Fraction of each action's source sequences assigned to train/.
  double train_fraction = 0.8;
};

struct EvaluateOptions {
  /// Sequences drawn per action and repeat; 0 evaluates every sequence.
  std::size_t subsample = 0;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
};

struct PlotOptions {
  std::size_t sample = 0;
  std::optional<std::size_t> joint; ///< no plot when unset
  std::size_t axis = 0;
};

struct RunConfig {
  TrainConfig train;
  std::filesystem::path data_dir;
  std::filesystem::path output_dir;
  std::filesystem::path checkpoint;
  /// Precomputed predictions (motion format) used by evaluate/smoothness
  /// instead of running a checkpoint.
  std::filesystem::path predictions;
  std::filesystem::path eval_csv; ///< input of report
  std::vector<double> horizons_ms{80, 160, 320, 400, 1000};
  /// Multiplies reported errors, e.g. to express normalized units in mm.
  double error_scale = 1.0;
  /// Keep only sequences with this label (all when empty).
  std::string action;
  PreprocessOptions preprocess;
  EvaluateOptions evaluate;
  PlotOptions plot;
  SynthSpec synth;
  std::uint64_t synth_seed = 0;
  std::vector<std::string> synth_actions{"synthetic"};

  /// Throws ErrorKind::argument.
  void validate() const;
};

nlohmann::json to_json(const RunConfig &cfg);
/// Keys absent from `j` keep the values of `base`.
RunConfig run_config_from_json(const nlohmann::json &j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path &path, RunConfig base = {});

nlohmann::json topology_to_json(const SkeletonTopology &t);
SkeletonTopology topology_from_json(const nlohmann::json &j);

/// Name of the skeleton description stored next to a dataset manifest.
inline constexpr const char *kTopologyName = "topology.json";
void save_topology(const std::filesystem::path &dir, const SkeletonTopology &t);
SkeletonTopology load_topology(const std::filesystem::path &dir);

/// Frames covered by a horizon. Throws ErrorKind::alignment, listing the
/// valid horizons, when ms * fps / 1000 is not a whole number of frames.
std::size_t horizon_to_frames(double ms, double fps);

/// Loads a dataset directory, using the config topology when it names one
/// and the directory's topology.json otherwise (the config is updated).
std::vector<MotionSequence> load_run_dataset(RunConfig &cfg,
                                             const std::filesystem::path &dir);

// -- commands -------------------------------------------------------------
// Each writes into cfg.output_dir and echoes the effective configuration to
// effective_config.json there.

void cmd_synth(RunConfig cfg);
void cmd_preprocess(RunConfig cfg);
/// Writes checkpoint.bin and train_log.csv; returns the final state.
TrainState cmd_train(RunConfig cfg);
void cmd_predict(RunConfig cfg);
/// Writes eval.csv (action, horizon_ms, model_err, baseline_err).
std::vector<EvalRow> cmd_evaluate(RunConfig cfg);

struct BaselineRow {
  std::string action;
  double horizon_ms = 0.0;
  double baseline_err = 0.0;
  friend bool operator==(const BaselineRow &, const BaselineRow &) = default;
};
/// Writes baseline.csv (action, horizon_ms, baseline_err).
std::vector<BaselineRow> cmd_baseline(RunConfig cfg);

struct SmoothnessRow {
  std::string action;
  double ground_truth = 0.0;
  double generated = 0.0;
  friend bool operator==(const SmoothnessRow &, const SmoothnessRow &) = default;
};
/// Writes smoothness.csv (action, ground_truth, generated).
std::vector<SmoothnessRow> cmd_smoothness(RunConfig cfg);
/// Renders eval.csv as a text table into report.txt and returns it.
std::string cmd_report(RunConfig cfg);

void write_baseline_csv(std::ostream &out, std::span<const BaselineRow> rows);
std::vector<BaselineRow> read_baseline_csv(std::istream &in);
void write_smoothness_csv(std::ostream &out, std::span<const SmoothnessRow> rows);
std::vector<SmoothnessRow> read_smoothness_csv(std::istream &in);

/// Action blocks with one row per method and one column per horizon.
std::string render_table(std::span<const EvalRow> rows, double error_scale);

struct Series {
  std::string name;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};
/// Line chart of the given series as a standalone SVG document.
std::string render_line_chart(std::span<const Series> series, const std::string &title,
                              const std::string &x_label, const std::string &y_label);

/// Parses argv-style arguments (without the program name), runs the command
/// and returns the exit code. Diagnostics go to `err`, listings to `out`.
int run(std::span<const std::string> args, std::ostream &out, std::ostream &err);

} // namespace mawgan::harness
