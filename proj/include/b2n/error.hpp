#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace b2n {

/// Machine-readable failure categories. The CLI prints these as the "error"
/// field of its JSON error object.
enum class ErrorCode {
  InvalidArgument,
  UnknownNode,
  GraphInvariant,
  MissingSepset,
  EmptyFile,
  RaggedRow,
  UnparseableCell,
  SchemaMismatch,
  DegenerateInput,
  InsufficientRows,
  TooLarge,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::UnknownNode: return "unknown_node";
    case ErrorCode::GraphInvariant: return "graph_invariant";
    case ErrorCode::MissingSepset: return "missing_sepset";
    case ErrorCode::EmptyFile: return "empty_file";
    case ErrorCode::RaggedRow: return "ragged_row";
    case ErrorCode::UnparseableCell: return "unparseable_cell";
    case ErrorCode::SchemaMismatch: return "schema_mismatch";
    case ErrorCode::DegenerateInput: return "degenerate_input";
    case ErrorCode::InsufficientRows: return "insufficient_rows";
    case ErrorCode::TooLarge: return "too_large";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace b2n
