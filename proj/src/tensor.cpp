// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "mawgan/error.hpp"
#include "mawgan/tensor.hpp"

namespace mawgan {

const char *to_string(ErrorKind kind) noexcept {
  switch (kind) {
  case ErrorKind::parse:
    return "parse error";
  case ErrorKind::shape:
    return "shape error";
  case ErrorKind::argument:
    return "argument error";
  case ErrorKind::degenerate:
    return "degenerate input";
  case ErrorKind::domain:
    return "domain error";
  case ErrorKind::singularity:
    return "singularity";
  case ErrorKind::convergence:
    return "convergence failure";
  case ErrorKind::numeric:
    return "numeric failure";
  case ErrorKind::state:
    return "state error";
  case ErrorKind::capability:
    return "unsupported operation";
  case ErrorKind::alignment:
    return "alignment error";
  case ErrorKind::io:
    return "i/o error";
  }
  return "error";
}

bool Tensor::all_finite() const noexcept {
  for (double v : values_)
    if (!std::isfinite(v))
      return false;
  return true;
}

} // namespace mawgan
