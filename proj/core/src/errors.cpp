#include "fvkit/errors.hpp"

namespace fvkit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kEmptyInput: return "empty input";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kInvalidDescriptor: return "invalid descriptor";
    case ErrorKind::kDegenerateData: return "degenerate data";
    case ErrorKind::kDegenerateLabels: return "degenerate labels";
    case ErrorKind::kDegenerateSplit: return "degenerate split";
    case ErrorKind::kDoubleNormalization: return "double normalization";
    case ErrorKind::kLabel: return "label error";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kIo: return "I/O error";
  }
  return "unknown error";
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::kIo ? 3 : 2;
}

}  // namespace fvkit
