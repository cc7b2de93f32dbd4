#pragma once

#include <stdexcept>
#include <string>

namespace mospi {

/// Raised when inputs violate a documented precondition or a domain object
/// invariant (shape mismatch, non-stochastic rows, out-of-range indices).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a well-formed problem has no solution (infeasible LP, CMDP
/// without a feasible policy, incompatible estimator/CI pairing).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for file-system and parse failures. `path()` names the offending file.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string path)
      : std::runtime_error(what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace mospi
