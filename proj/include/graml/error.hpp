#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graml {

enum class ErrorKind {
  ContractViolation,
  Dimension,
  Encoding,
  TrainingFailure,
  GenerationFailure,
  PlanningFailure,
  Divergence,
  Config,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` is what the CLI reports
// in its machine-readable error records.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::ContractViolation, message);
}

}  // namespace graml
