// SPDX-License-Identifier: Apache-2.0
//
// Skeleton motion sequences: ingestion, preprocessing, windowing and the
// synthetic generator used when licensed mocap data is unavailable.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mawgan/tensor.hpp"

namespace mawgan {

struct Bone {
  std::size_t parent = 0;
  std::size_t child = 0;
  friend bool operator==(const Bone &, const Bone &) = default;
};

struct SkeletonTopology {
  std::size_t joints = 0;
  std::vector<Bone> bones;
  std::size_t hip = 0;

  /// Throws ErrorKind::argument on a violated invariant.
  void validate() const;

  /// Joints 0..k-1 linked as a chain rooted at the hip (joint 0).
  static SkeletonTopology chain(std::size_t joints);
};

/// T poses of k joints, stored frame-major as a T x 3k tensor
/// (x0 y0 z0 x1 y1 z1 ... per row).
class MotionSequence {
public:
  MotionSequence() = default;
  MotionSequence(std::size_t joints, double fps, Tensor coords,
                 std::string label = {});

  std::size_t joints() const noexcept { return joints_; }
  std::size_t frames() const noexcept { return coords_.rows(); }
  std::size_t dim() const noexcept { return 3 * joints_; }
  double fps() const noexcept { return fps_; }
  const std::string &label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  const Tensor &coords() const noexcept { return coords_; }
  Tensor &coords() noexcept { return coords_; }
  std::span<const double> frame(std::size_t t) const {
    return coords_.row_span(t);
  }
  std::span<double> frame(std::size_t t) { return coords_.row_span(t); }
  double &at(std::size_t t, std::size_t joint, std::size_t axis) {
    return coords_(t, 3 * joint + axis);
  }
  double at(std::size_t t, std::size_t joint, std::size_t axis) const {
    return coords_(t, 3 * joint + axis);
  }

  /// Frames [begin, end) as a new sequence with the same fps and label.
  MotionSequence slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const MotionSequence &,
                         const MotionSequence &) = default;

private:
  std::size_t joints_ = 0;
  double fps_ = 0.0;
  Tensor coords_;
  std::string label_;
};

/// Prior/future pairs cut from equal-length sequences.
struct DatasetSplit {
  std::size_t prior_len = 0;
  std::size_t total_len = 0;
  std::vector<std::pair<MotionSequence, MotionSequence>> samples;
};

// -- file format -----------------------------------------------------------
//
//   # comment
//   sequence joints=<k> fps=<fps> frames=<T> [label=<text to end of line>]
//   <3k numbers>      (T lines)
//
// Numbers are written in scientific notation with 17 significant digits so
// that a save/load cycle is bit-exact.

std::vector<MotionSequence> read_sequences(std::istream &in,
                                           const SkeletonTopology &topology,
                                           const std::string &source = "<stream>");
void write_sequences(std::ostream &out, std::span<const MotionSequence> seqs);

std::vector<MotionSequence> load_sequences(const std::filesystem::path &path,
                                           const SkeletonTopology &topology);
void save_sequences(const std::filesystem::path &path,
                    std::span<const MotionSequence> seqs);

/// A dataset directory holds sequence files plus `index.tsv` with one
/// `<file>\t<label>` line per file (paths relative to the directory).
struct ManifestEntry {
  std::string file;
  std::string label;
};

inline constexpr const char *kManifestName = "index.tsv";

std::vector<ManifestEntry> read_manifest(const std::filesystem::path &dir);
void write_manifest(const std::filesystem::path &dir,
                    std::span<const ManifestEntry> entries);
/// Loads every file listed in the manifest; each sequence takes the label
/// of its file entry.
std::vector<MotionSequence> load_dataset(const std::filesystem::path &dir,
                                         const SkeletonTopology &topology);

// -- preprocessing ---------------------------------------------------------

/// Mean subtraction, division by the Frobenius norm of the centered
/// sequence, then per-frame subtraction of the hip joint.
MotionSequence normalize(const MotionSequence &seq,
                         const SkeletonTopology &topology);

/// Keeps frames 0, factor, 2*factor, ...
MotionSequence downsample(const MotionSequence &seq, std::size_t factor);

/// Windows of `length` frames starting at 0, stride, 2*stride, ...
/// Returns an empty list when length exceeds the sequence.
std::vector<MotionSequence> window(const MotionSequence &seq,
                                   std::size_t length, std::size_t stride);

/// (frames [0, prior_len), frames [prior_len, T))
std::pair<MotionSequence, MotionSequence>
split_prior_future(const MotionSequence &seq, std::size_t prior_len);

MotionSequence concatenate(const MotionSequence &a, const MotionSequence &b);

/// Splits every sequence of length `total_len` into (prior, future).
DatasetSplit make_split(std::span<const MotionSequence> seqs,
                        std::size_t prior_len, std::size_t total_len);

// -- synthetic data --------------------------------------------------------

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Each coordinate follows amplitude * (sin(2*pi*frequency*t + phase) +
/// drift*t) with t in seconds; parameters are drawn per sample and per
/// coordinate from the ranges below. A zero amplitude range therefore yields
/// constant (all-zero) sequences.
struct SynthSpec {
  std::size_t joints = 17;
  std::size_t frames = 50;
  double fps = 25.0;
  std::size_t samples = 100;
  Range amplitude{0.05, 0.3};
  Range frequency{0.5, 1.5}; ///< Hz
  Range phase{0.0, 6.283185307179586};
  Range drift{-0.1, 0.1}; ///< relative to amplitude, per second
  std::string label = "synthetic";
};

std::vector<MotionSequence> synthesize_dataset(const SynthSpec &spec,
                                               std::uint64_t seed);

} // namespace mawgan
