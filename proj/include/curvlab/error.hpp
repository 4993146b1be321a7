#pragma once

#include <stdexcept>
#include <string>

namespace curvlab {

/// Broad classes of failure. The CLI maps these onto exit codes.
enum class ErrorKind {
  Domain,     // precondition violated by the caller (dimension, region, parameter range)
  Config,     // malformed input text, file or option
  Numerical,  // non-PD metric, NaN, residual above the scheme tolerance
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::Domain, what);
}

}  // namespace curvlab
