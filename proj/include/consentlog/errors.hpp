#pragma once

#include <stdexcept>
#include <string>

namespace consentlog {

/// Error codes shared across the library. Each maps to one failure mode of
/// the public operations; the CLI turns them into exit codes.
enum class Errc {
  UnknownClass,
  CategoryMismatch,
  CycleDetected,
  UnknownParent,
  DuplicateClass,
  EmptyUnion,
  BadInterval,
  ParseError,
  ValidationError,
  UniverseTooLarge,
  DuplicateTopic,
  BadPartitionCount,
  UnknownTopic,
  UnknownMember,
  NotAssigned,
  RewindRejected,
  BadDuration,
  EmptyInput,
  GenerationStuck,
  ConfigError,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace consentlog
