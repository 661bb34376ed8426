#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace topicllm {

/// Error families map onto process exit codes in the CLI.
enum class ErrorCategory {
  kUsage = 1,     // bad flags or config
  kProvider = 2,  // terminal provider failure
  kData = 3,      // input or model-output validation failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorCategory::kUsage, message) {}

  /// All violations found in one validation pass.
  explicit ConfigError(std::vector<std::string> violations)
      : Error(ErrorCategory::kUsage, join(violations)),
        violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "invalid configuration:";
    for (const auto& item : items) out += "\n  - " + item;
    return out;
  }

  std::vector<std::string> violations_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ErrorCategory::kData, message) {}
};

/// Model output that does not follow the expected line format.
class FormatError : public DataError {
 public:
  explicit FormatError(const std::string& message) : DataError(message) {}
};

}  // namespace topicllm
