#pragma once

#include <stdexcept>
#include <string>

namespace quasispec {

/// Machine-readable failure categories, echoed into run manifests.
enum class ErrorCode {
  Precondition,
  RationalDetected,
  NoConvergence,
  NotContracting,
  NotUnimodular,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::RationalDetected: return "rational_detected";
    case ErrorCode::NoConvergence: return "no_convergence";
    case ErrorCode::NotContracting: return "not_contracting";
    case ErrorCode::NotUnimodular: return "not_unimodular";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

  /// Numerical failures (as opposed to bad input) map to CLI exit status 3.
  bool numerical() const noexcept {
    return code_ == ErrorCode::NoConvergence || code_ == ErrorCode::NotContracting;
  }

 private:
  ErrorCode code_;
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& what) : Error(ErrorCode::Precondition, what) {}
};
struct RationalDetected : Error {
  explicit RationalDetected(const std::string& what) : Error(ErrorCode::RationalDetected, what) {}
};
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& what) : Error(ErrorCode::NoConvergence, what) {}
};
struct NotContracting : Error {
  explicit NotContracting(const std::string& what) : Error(ErrorCode::NotContracting, what) {}
};
struct NotUnimodular : Error {
  explicit NotUnimodular(const std::string& what) : Error(ErrorCode::NotUnimodular, what) {}
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw PreconditionError(what);
}

}  // namespace quasispec
