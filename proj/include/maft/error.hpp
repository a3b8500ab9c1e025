// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace maft {

/// Broad failure classes. The C API and the CLI map these onto status and
/// exit codes.
enum class ErrorCode {
  InvalidArgument,  // malformed input, shape mismatch, bad parameter
  Validation,       // well-formed input that violates a physical/plan constraint
  Numerical,        // divergence, non-convergence, aliasing guard
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace maft
