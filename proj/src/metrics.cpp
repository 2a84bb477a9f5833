// SPDX-License-Identifier: Apache-2.0

#include "mawgan/metrics.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "format.hpp"
#include "mawgan/svd3.hpp"

namespace mawgan {

namespace {

void require_matched(std::span<const MotionSequence> gt,
                     std::span<const MotionSequence> pred, const char *op) {
  if (gt.size() != pred.size())
    fail(ErrorKind::shape, std::string(op) + ": " + std::to_string(gt.size()) +
                               " ground-truth vs " +
                               std::to_string(pred.size()) + " predicted samples");
  if (gt.empty())
    fail(ErrorKind::argument, std::string(op) + ": no samples");
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (!gt[i].coords().same_shape(pred[i].coords()))
      fail(ErrorKind::shape, std::string(op) + ": sample " + std::to_string(i) +
                                 " shapes " + gt[i].coords().shape_string() +
                                 " and " + pred[i].coords().shape_string() +
                                 " differ");
}

double joint_distance(std::span<const double> a, std::span<const double> b,
                      std::size_t j) {
  const double dx = a[3 * j] - b[3 * j];
  const double dy = a[3 * j + 1] - b[3 * j + 1];
  const double dz = a[3 * j + 2] - b[3 * j + 2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

} // namespace

GramDistanceResult gram_distance(PoseView pi, PoseView pj) {
  if (pi.size() != pj.size())
    fail(ErrorKind::shape, "gram_distance: poses have " +
                               std::to_string(pi.size() / 3) + " and " +
                               std::to_string(pj.size() / 3) + " joints");
  if (pi.empty() || pi.size() % 3 != 0)
    fail(ErrorKind::shape, "gram_distance: pose size must be a positive multiple of 3");
  const std::size_t k = pi.size() / 3;
  Mat3 m{};
  double tr_i = 0.0, tr_j = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    for (int a = 0; a < 3; ++a) {
      const double ja = pj[3 * r + a];
      tr_j += ja * ja;
      tr_i += pi[3 * r + a] * pi[3 * r + a];
      for (int b = 0; b < 3; ++b)
        m[3 * a + b] += ja * pi[3 * r + b];
    }
  }
  const Svd3 s = svd3(m);
  GramDistanceResult out;
  out.singular_values = s.sigma;
  const double value = tr_i + tr_j - 2.0 * (s.sigma[0] + s.sigma[1] + s.sigma[2]);
  out.value = value > 0.0 ? value : 0.0;
  return out;
}

double skeleton_integrity_loss(std::span<const MotionSequence> gt,
                               std::span<const MotionSequence> pred) {
  require_matched(gt, pred, "skeleton_integrity_loss");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i)
    for (std::size_t t = 0; t < gt[i].frames(); ++t, ++count)
      total += gram_distance(gt[i].frame(t), pred[i].frame(t)).value;
  return total / static_cast<double>(count);
}

double bone_length_loss(std::span<const MotionSequence> gt,
                        std::span<const MotionSequence> pred,
                        const SkeletonTopology &topology) {
  require_matched(gt, pred, "bone_length_loss");
  topology.validate();
  if (gt.front().joints() != topology.joints)
    fail(ErrorKind::shape, "bone_length_loss: sequences do not match topology");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t t = 0; t < gt[i].frames(); ++t) {
      auto g = gt[i].frame(t);
      auto p = pred[i].frame(t);
      for (const Bone &b : topology.bones) {
        const double lg = std::sqrt(
            std::pow(g[3 * b.child] - g[3 * b.parent], 2) +
            std::pow(g[3 * b.child + 1] - g[3 * b.parent + 1], 2) +
            std::pow(g[3 * b.child + 2] - g[3 * b.parent + 2], 2));
        const double lp = std::sqrt(
            std::pow(p[3 * b.child] - p[3 * b.parent], 2) +
            std::pow(p[3 * b.child + 1] - p[3 * b.parent + 1], 2) +
            std::pow(p[3 * b.child + 2] - p[3 * b.parent + 2], 2));
        total += std::abs(lg - lp);
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

double mpjpe(const MotionSequence &gt, const MotionSequence &pred,
             std::size_t horizon_frames) {
  if (gt.joints() != pred.joints())
    fail(ErrorKind::shape, "mpjpe: joint counts differ");
  if (horizon_frames == 0 || horizon_frames > gt.frames() ||
      horizon_frames > pred.frames())
    fail(ErrorKind::argument,
         "mpjpe: horizon of " + std::to_string(horizon_frames) +
             " frames exceeds sequence lengths (" +
             std::to_string(gt.frames()) + ", " +
             std::to_string(pred.frames()) + ")");
  double total = 0.0;
  for (std::size_t t = 0; t < horizon_frames; ++t) {
    auto g = gt.frame(t);
    auto p = pred.frame(t);
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double d = g[c] - p[c];
      total += d * d;
    }
  }
  return std::sqrt(total / (static_cast<double>(horizon_frames) *
                            static_cast<double>(gt.joints())));
}

MotionSequence zero_velocity_baseline(const MotionSequence &prior,
                                      std::size_t horizon_frames) {
  if (horizon_frames == 0)
    fail(ErrorKind::argument, "baseline horizon must be positive");
  auto last = prior.frame(prior.frames() - 1);
  Tensor coords(horizon_frames, prior.dim());
  for (std::size_t t = 0; t < horizon_frames; ++t)
    std::copy(last.begin(), last.end(), coords.row_span(t).begin());
  return MotionSequence(prior.joints(), prior.fps(), std::move(coords),
                        prior.label());
}

double smoothness(const MotionSequence &seq) {
  if (seq.frames() < 2)
    fail(ErrorKind::argument, "smoothness needs at least two frames");
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < seq.frames(); ++t)
    for (std::size_t j = 0; j < seq.joints(); ++j)
      total += joint_distance(seq.frame(t + 1), seq.frame(t), j);
  return total / (static_cast<double>(seq.frames() - 1) *
                  static_cast<double>(seq.joints()));
}

std::vector<EvalRow> to_rows(std::span<const EvalReport> reports) {
  std::vector<EvalRow> rows;
  for (const EvalReport &r : reports)
    for (const auto &[ms, err] : r.mpjpe_at) {
      const auto base = r.baseline_at.find(ms);
      rows.push_back({r.action, ms, err,
                      base == r.baseline_at.end() ? std::nan("") : base->second});
    }
  return rows;
}

void write_eval_csv(std::ostream &out, std::span<const EvalRow> rows) {
  out << "action,horizon_ms,model_err,baseline_err\n";
  for (const EvalRow &r : rows) {
    if (r.action.find_first_of(",\n") != std::string::npos)
      fail(ErrorKind::argument, "action label may not contain ',' or newlines");
    out << r.action << ',' << detail::format_number(r.horizon_ms) << ','
        << detail::format_number(r.model_err) << ','
        << detail::format_number(r.baseline_err) << '\n';
  }
}

std::vector<EvalRow> read_eval_csv(std::istream &in) {
  std::vector<EvalRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (lineno == 1 && line.starts_with("action,"))
      continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 4)
      fail(ErrorKind::parse, "evaluation CSV line " + std::to_string(lineno) +
                                 ": expected 4 fields");
    EvalRow r;
    r.action = std::string(fields[0]);
    double *targets[3] = {&r.horizon_ms, &r.model_err, &r.baseline_err};
    for (int f = 0; f < 3; ++f) {
      const auto v = detail::parse_number(fields[f + 1]);
      if (!v)
        fail(ErrorKind::parse, "evaluation CSV line " + std::to_string(lineno) +
                                   ", field " + std::to_string(f + 2) +
                                   ": invalid number");
      *targets[f] = *v;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

} // namespace mawgan
