#pragma once

#include <stdexcept>
#include <string>

namespace tripletclass {

/// Failure categories surfaced by every layer of the pipeline. Each maps
/// to a stable code string (for the CLI's one-line diagnostics) and a
/// distinct process exit status.
enum class ErrorCode {
  config,      // bad configuration value or flag combination
  validation,  // dataset or input failed a structural check
  data,        // file unreadable or undecodable
  contract,    // API precondition violated by the caller
  numerical,   // numerical degeneracy (NaN, zero norm, divergence guard)
  sampling,    // triplet sampling impossible on the given split
  mining,      // semi-hard mining impossible on the given batch
  training,    // a training run aborted
  integrity,   // artifact missing or digest mismatch
  locked,      // output directory lock held by another run
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return "CONFIG";
    case ErrorCode::validation: return "VALIDATION";
    case ErrorCode::data: return "DATA";
    case ErrorCode::contract: return "CONTRACT";
    case ErrorCode::numerical: return "NUMERICAL";
    case ErrorCode::sampling: return "SAMPLING";
    case ErrorCode::mining: return "MINING";
    case ErrorCode::training: return "TRAINING";
    case ErrorCode::integrity: return "INTEGRITY";
    case ErrorCode::locked: return "LOCKED";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

  /// Exit statuses start at 2; 1 is reserved for unexpected exceptions.
  int exit_status() const { return 2 + static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tripletclass
