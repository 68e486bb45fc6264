#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rangehall {

enum class ErrorCode {
  SyntaxError,
  SchemaError,
  ReferenceError,
  InvalidDefinition,
  InvalidArgument,
  RunClosed,
  UnknownRun,
  UnknownActor,
  UnknownReference,
  KindMismatch,
  UnknownService,
  UnknownCategory,
  UnsortedInput,
  SubjectMismatch,
  TooManyParticipants,
  MissingTeamProfile,
  RunStillOpen,
  NoRuns,
  DefinitionMismatch,
  EmptyReport,
  NotAParticipant,
  RoleForbidden,
  Unauthorized,
  Io,
};

inline constexpr std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ReferenceError: return "ReferenceError";
    case ErrorCode::InvalidDefinition: return "InvalidDefinition";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RunClosed: return "RunClosed";
    case ErrorCode::UnknownRun: return "UnknownRun";
    case ErrorCode::UnknownActor: return "UnknownActor";
    case ErrorCode::UnknownReference: return "UnknownReference";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::UnknownService: return "UnknownService";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::SubjectMismatch: return "SubjectMismatch";
    case ErrorCode::TooManyParticipants: return "TooManyParticipants";
    case ErrorCode::MissingTeamProfile: return "MissingTeamProfile";
    case ErrorCode::RunStillOpen: return "RunStillOpen";
    case ErrorCode::NoRuns: return "NoRuns";
    case ErrorCode::DefinitionMismatch: return "DefinitionMismatch";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::NotAParticipant: return "NotAParticipant";
    case ErrorCode::RoleForbidden: return "RoleForbidden";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Base of every failure raised by the library. The code is the stable,
/// machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed document. Line and column are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& message)
      : Error(ErrorCode::SyntaxError,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct DanglingReference {
  std::string id;        // the identifier that failed to resolve
  std::string location;  // JSON pointer of the referring field
  std::string target;    // what kind of thing it should have named
};

class ReferenceError : public Error {
 public:
  explicit ReferenceError(std::vector<DanglingReference> dangling)
      : Error(ErrorCode::ReferenceError, describe(dangling)), dangling_(std::move(dangling)) {}

  const std::vector<DanglingReference>& dangling() const noexcept { return dangling_; }

 private:
  static std::string describe(const std::vector<DanglingReference>& refs) {
    std::string out;
    for (const auto& r : refs) {
      if (!out.empty()) out += "; ";
      out += "unknown " + r.target + " '" + r.id + "' at " + r.location;
    }
    return out;
  }

  std::vector<DanglingReference> dangling_;
};

}  // namespace rangehall
