#pragma once

#include <stdexcept>
#include <string>

namespace elicit {

/// Process exit codes shared by every tool.
enum class ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kBackend = 2,
  kInternal = 3,
};

/// Base of every error thrown by the library. Each subclass carries the exit
/// code a command-line front end should report for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

/// Malformed input files, bad configuration, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kValidation; }
};

/// Chat or embedding backend failures: transport, HTTP status, replay misses.
class BackendError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kBackend; }
};

/// Connection-level failure or a 5xx status. Retried by RetryPolicy.
class TransientBackendError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Raised in replay mode when no transcript entry matches a request.
class ReplayMissError : public BackendError {
 public:
  explicit ReplayMissError(std::string request_hash);
  const std::string& request_hash() const noexcept { return request_hash_; }

 private:
  std::string request_hash_;
};

/// An internal invariant did not hold. Indicates a bug.
class InvariantError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInternal; }
};

/// Throws InvariantError with `message` when `condition` is false.
void ensure(bool condition, const std::string& message);

}  // namespace elicit
