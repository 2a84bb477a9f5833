// SPDX-License-Identifier: Apache-2.0

#include "mawgan/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mawgan/rng.hpp"

namespace mawgan {

void SkeletonTopology::validate() const {
  if (joints == 0)
    fail(ErrorKind::argument, "skeleton must have at least one joint");
  if (hip >= joints)
    fail(ErrorKind::argument, "hip index " + std::to_string(hip) +
                                  " out of range for " +
                                  std::to_string(joints) + " joints");
  if (bones.empty())
    fail(ErrorKind::argument, "skeleton must have at least one bone");
  for (std::size_t b = 0; b < bones.size(); ++b) {
    const Bone &bone = bones[b];
    if (bone.parent >= joints || bone.child >= joints)
      fail(ErrorKind::argument,
           "bone " + std::to_string(b) + " references a joint out of range");
    if (bone.parent == bone.child)
      fail(ErrorKind::argument,
           "bone " + std::to_string(b) + " connects a joint to itself");
  }
}

SkeletonTopology SkeletonTopology::chain(std::size_t joints) {
  SkeletonTopology topo;
  topo.joints = joints;
  topo.hip = 0;
  for (std::size_t j = 1; j < joints; ++j)
    topo.bones.push_back({j - 1, j});
  return topo;
}

MotionSequence::MotionSequence(std::size_t joints, double fps, Tensor coords,
                               std::string label)
    : joints_(joints), fps_(fps), coords_(std::move(coords)),
      label_(std::move(label)) {
  if (joints_ == 0)
    fail(ErrorKind::argument, "motion sequence needs at least one joint");
  if (!(fps_ > 0.0) || !std::isfinite(fps_))
    fail(ErrorKind::argument, "frame rate must be positive");
  if (coords_.rows() == 0)
    fail(ErrorKind::argument, "motion sequence needs at least one frame");
  if (coords_.cols() != 3 * joints_)
    fail(ErrorKind::shape, "coordinate tensor " + coords_.shape_string() +
                               " does not hold " + std::to_string(joints_) +
                               " joints");
}

MotionSequence MotionSequence::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > frames())
    fail(ErrorKind::argument, "invalid frame range [" + std::to_string(begin) +
                                  ", " + std::to_string(end) + ")");
  const std::size_t d = dim();
  std::vector<double> values(coords_.data() + begin * d,
                             coords_.data() + end * d);
  return MotionSequence(joints_, fps_, Tensor(end - begin, d, std::move(values)),
                        label_);
}

MotionSequence normalize(const MotionSequence &seq,
                         const SkeletonTopology &topology) {
  if (seq.joints() != topology.joints)
    fail(ErrorKind::shape, "sequence has " + std::to_string(seq.joints()) +
                               " joints, topology has " +
                               std::to_string(topology.joints));
  MotionSequence out = seq;
  auto values = out.coords().values();
  const double count = static_cast<double>(values.size());

  double mean = 0.0, max_abs = 0.0;
  for (double v : values) {
    mean += v;
    max_abs = std::max(max_abs, std::abs(v));
  }
  mean /= count;

  double sumsq = 0.0;
  for (double &v : values) {
    v -= mean;
    sumsq += v * v;
  }
  const double norm = std::sqrt(sumsq);
  // Centering a constant sequence leaves only rounding noise.
  if (!(norm > 1e-12 * max_abs * std::sqrt(count)))
    fail(ErrorKind::degenerate,
         "cannot normalize a constant sequence (zero norm after centering)");
  for (double &v : values)
    v /= norm;

  const std::size_t hip = topology.hip;
  for (std::size_t t = 0; t < out.frames(); ++t) {
    auto f = out.frame(t);
    const double hx = f[3 * hip], hy = f[3 * hip + 1], hz = f[3 * hip + 2];
    for (std::size_t j = 0; j < out.joints(); ++j) {
      f[3 * j] -= hx;
      f[3 * j + 1] -= hy;
      f[3 * j + 2] -= hz;
    }
  }
  return out;
}

MotionSequence downsample(const MotionSequence &seq, std::size_t factor) {
  if (factor < 1)
    fail(ErrorKind::argument, "downsampling factor must be >= 1");
  if (factor > 1 && seq.frames() < factor + 1)
    fail(ErrorKind::argument, "sequence of " + std::to_string(seq.frames()) +
                                  " frames is too short to downsample by " +
                                  std::to_string(factor));
  const std::size_t kept = (seq.frames() + factor - 1) / factor;
  const std::size_t d = seq.dim();
  Tensor coords(kept, d);
  for (std::size_t i = 0; i < kept; ++i) {
    auto src = seq.frame(i * factor);
    std::copy(src.begin(), src.end(), coords.row_span(i).begin());
  }
  return MotionSequence(seq.joints(), seq.fps() / static_cast<double>(factor),
                        std::move(coords), seq.label());
}

std::vector<MotionSequence> window(const MotionSequence &seq,
                                   std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0)
    fail(ErrorKind::argument, "window length and stride must be positive");
  std::vector<MotionSequence> out;
  for (std::size_t start = 0; start + length <= seq.frames(); start += stride)
    out.push_back(seq.slice(start, start + length));
  return out;
}

std::pair<MotionSequence, MotionSequence>
split_prior_future(const MotionSequence &seq, std::size_t prior_len) {
  if (prior_len < 1 || prior_len >= seq.frames())
    fail(ErrorKind::argument,
         "prior length " + std::to_string(prior_len) +
             " must be in [1, " + std::to_string(seq.frames()) + ")");
  return {seq.slice(0, prior_len), seq.slice(prior_len, seq.frames())};
}

MotionSequence concatenate(const MotionSequence &a, const MotionSequence &b) {
  if (a.joints() != b.joints())
    fail(ErrorKind::shape, "cannot concatenate sequences with different joints");
  std::vector<double> values(a.coords().values().begin(),
                             a.coords().values().end());
  values.insert(values.end(), b.coords().values().begin(),
                b.coords().values().end());
  return MotionSequence(a.joints(), a.fps(),
                        Tensor(a.frames() + b.frames(), a.dim(),
                               std::move(values)),
                        a.label());
}

DatasetSplit make_split(std::span<const MotionSequence> seqs,
                        std::size_t prior_len, std::size_t total_len) {
  if (prior_len < 1 || prior_len >= total_len)
    fail(ErrorKind::argument, "need 1 <= prior length < total length");
  DatasetSplit split;
  split.prior_len = prior_len;
  split.total_len = total_len;
  split.samples.reserve(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].frames() != total_len)
      fail(ErrorKind::shape, "sequence " + std::to_string(i) + " has " +
                                 std::to_string(seqs[i].frames()) +
                                 " frames, expected " +
                                 std::to_string(total_len));
    split.samples.push_back(split_prior_future(seqs[i], prior_len));
  }
  return split;
}

namespace {

void check_range(const Range &r, const char *name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
    fail(ErrorKind::argument, std::string("invalid ") + name + " range");
}

} // namespace

std::vector<MotionSequence> synthesize_dataset(const SynthSpec &spec,
                                               std::uint64_t seed) {
  if (spec.joints == 0 || spec.frames == 0)
    fail(ErrorKind::argument, "synthetic spec needs joints and frames");
  if (!(spec.fps > 0.0))
    fail(ErrorKind::argument, "synthetic spec needs a positive frame rate");
  check_range(spec.amplitude, "amplitude");
  check_range(spec.frequency, "frequency");
  check_range(spec.phase, "phase");
  check_range(spec.drift, "drift");

  Rng rng(seed);
  const std::size_t d = 3 * spec.joints;
  std::vector<MotionSequence> out;
  out.reserve(spec.samples);
  std::vector<double> amp(d), freq(d), phase(d), drift(d);
  for (std::size_t s = 0; s < spec.samples; ++s) {
    for (std::size_t c = 0; c < d; ++c) {
      amp[c] = rng.uniform(spec.amplitude.lo, spec.amplitude.hi);
      freq[c] = rng.uniform(spec.frequency.lo, spec.frequency.hi);
      phase[c] = rng.uniform(spec.phase.lo, spec.phase.hi);
      drift[c] = rng.uniform(spec.drift.lo, spec.drift.hi);
    }
    Tensor coords(spec.frames, d);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const double time = static_cast<double>(t) / spec.fps;
      for (std::size_t c = 0; c < d; ++c)
        coords(t, c) = amp[c] * (std::sin(2.0 * std::numbers::pi * freq[c] * time +
                                          phase[c]) +
                                 drift[c] * time);
    }
    out.emplace_back(spec.joints, spec.fps, std::move(coords), spec.label);
  }
  return out;
}

} // namespace mawgan
