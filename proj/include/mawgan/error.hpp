// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mawgan {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorKind {
  parse,        ///< malformed input file
  shape,        ///< dimension mismatch between operands
  argument,     ///< invalid argument value
  degenerate,   ///< zero-norm sequence or SRVF
  domain,       ///< input outside the operation's domain (e.g. non-unit SRVF)
  singularity,  ///< antipodal pair in log map
  convergence,  ///< iterative method exhausted its budget
  numeric,      ///< NaN / overflow / non-finite values
  state,        ///< object used in the wrong lifecycle state
  capability,   ///< unsupported network layer for the requested transform
  alignment,    ///< horizon not aligned with the frame grid
  io,           ///< filesystem failure
};

const char *to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string &what, double residual)
      : Error(ErrorKind::convergence, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

} // namespace mawgan
