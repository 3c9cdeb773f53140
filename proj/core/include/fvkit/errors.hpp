#pragma once

#include <stdexcept>
#include <string>

namespace fvkit {

enum class ErrorKind {
  kShape,
  kEmptyInput,
  kInsufficientData,
  kInvalidDescriptor,
  kDegenerateData,
  kDegenerateLabels,
  kDegenerateSplit,
  kDoubleNormalization,
  kLabel,
  kInvalidArgument,
  kFormat,
  kIo,
};

const char* to_string(ErrorKind kind);

// All library failures are reported as fvkit::Error. The kind is what callers
// branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for the CLI: 3 for I/O failures, 2 for everything else.
int exit_code_for(ErrorKind kind);

}  // namespace fvkit
