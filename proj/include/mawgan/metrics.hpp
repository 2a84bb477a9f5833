// SPDX-License-Identifier: Apache-2.0
//
// Pose-space losses and evaluation metrics.
#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mawgan/motion.hpp"

namespace mawgan {

/// A single pose: k joints as 3k contiguous values (x y z per joint), i.e.
/// one row of MotionSequence::coords().
using PoseView = std::span<const double>;

struct GramDistanceResult {
  double value = 0.0;
  std::array<double, 3> singular_values{}; ///< of P_j^T P_i, descending
};

/// Distance between the Gram matrices P_i P_i^T and P_j P_j^T:
/// Tr(G_i) + Tr(G_j) - 2 * sum(sigma(P_j^T P_i)), clamped at 0.
GramDistanceResult gram_distance(PoseView pi, PoseView pj);

/// Mean Gram distance over all samples and all frames of the predictions.
double skeleton_integrity_loss(std::span<const MotionSequence> gt,
                               std::span<const MotionSequence> pred);

/// Mean absolute difference of bone lengths over samples, frames and bones.
double bone_length_loss(std::span<const MotionSequence> gt,
                        std::span<const MotionSequence> pred,
                        const SkeletonTopology &topology);

/// Root of the mean squared per-joint error over the first `horizon_frames`
/// frames, in the sequences' length unit.
double mpjpe(const MotionSequence &gt, const MotionSequence &pred,
             std::size_t horizon_frames);

/// `horizon_frames` copies of the last prior pose.
MotionSequence zero_velocity_baseline(const MotionSequence &prior,
                                      std::size_t horizon_frames);

/// Mean Euclidean distance between consecutive frames, over frames and
/// joints.
double smoothness(const MotionSequence &seq);

/// Per-action evaluation result keyed by horizon in milliseconds.
struct EvalReport {
  std::string action;
  std::map<double, double> mpjpe_at;
  std::map<double, double> baseline_at;
  double smoothness_gt = 0.0;
  double smoothness_pred = 0.0;
};

/// One CSV row: action, horizon_ms, model_err, baseline_err.
struct EvalRow {
  std::string action;
  double horizon_ms = 0.0;
  double model_err = 0.0;
  double baseline_err = 0.0;
  friend bool operator==(const EvalRow &, const EvalRow &) = default;
};

std::vector<EvalRow> to_rows(std::span<const EvalReport> reports);
void write_eval_csv(std::ostream &out, std::span<const EvalRow> rows);
std::vector<EvalRow> read_eval_csv(std::istream &in);

} // namespace mawgan
