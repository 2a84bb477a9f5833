// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit and acceptance tests.
#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>

#include "mawgan/motion.hpp"
#include "mawgan/sphere.hpp"
#include "mawgan/tensor.hpp"

namespace testing_support {

using mawgan::Tensor;

inline Tensor random_tensor(std::mt19937_64 &gen, std::size_t r, std::size_t c,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (double &v : t.values())
    v = u(gen);
  return t;
}

inline mawgan::MotionSequence random_sequence(std::mt19937_64 &gen, std::size_t frames,
                                              std::size_t joints, double fps = 25.0) {
  return {joints, fps, random_tensor(gen, frames, 3 * joints)};
}

inline mawgan::Srvf random_unit_srvf(std::mt19937_64 &gen, std::size_t intervals,
                                     std::size_t dim) {
  mawgan::Srvf q{random_tensor(gen, intervals, dim),
                 1.0 / static_cast<double>(intervals), false};
  return mawgan::to_unit(q).first;
}

inline double max_abs_diff(const Tensor &a, const Tensor &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

/// Central differences of f with respect to every entry of x.
inline Tensor numeric_gradient(const std::function<double(const Tensor &)> &f, Tensor x,
                               double h = 1e-6) {
  Tensor g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x.values()[i];
    x.values()[i] = keep + h;
    const double up = f(x);
    x.values()[i] = keep - h;
    const double down = f(x);
    x.values()[i] = keep;
    g.values()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max(1, max |b|): relative to the gradient's magnitude, so
/// that entries near zero do not dominate.
inline double relative_error(const Tensor &analytic, const Tensor &numeric) {
  double scale = 1.0;
  for (double v : numeric.values())
    scale = std::max(scale, std::abs(v));
  return max_abs_diff(analytic, numeric) / scale;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mawgan-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }

private:
  std::filesystem::path path_;
};

} // namespace testing_support
