#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace gaitverify {

using Index = Eigen::Index;

inline constexpr const char* kToolkitVersion = "0.1.0";

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Data failed a semantic check (e.g. non-monotonic timestamps in a recording).
class ValidationError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// The object is not in a state that permits the call.
class InvalidState : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Binary container is corrupt, truncated or has the wrong magic.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  VersionError(unsigned found, unsigned expected)
      : FormatError("unsupported container version " + std::to_string(found) +
                    " (expected " + std::to_string(expected) + ")"),
        found_(found) {}
  unsigned found() const noexcept { return found_; }

 private:
  unsigned found_;
};

/// An iterative solver hit its iteration cap. Carries the final residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace gaitverify
