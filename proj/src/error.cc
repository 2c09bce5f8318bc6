#include "damln/error.h"

namespace damln {
namespace {

std::string Decorate(ErrorCode code, const std::string& message, int line,
                     int column) {
  std::string out(ErrorCodeName(code));
  if (line > 0) {
    out += " at line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnknownDomain: return "UnknownDomain";
    case ErrorCode::kUnknownPredicate: return "UnknownPredicate";
    case ErrorCode::kArityMismatch: return "ArityMismatch";
    case ErrorCode::kTypeConflict: return "TypeConflict";
    case ErrorCode::kDuplicatePredicate: return "DuplicatePredicate";
    case ErrorCode::kDuplicateLiteral: return "DuplicateLiteral";
    case ErrorCode::kIncompleteBinding: return "IncompleteBinding";
    case ErrorCode::kWrongDomainConstant: return "WrongDomainConstant";
    case ErrorCode::kUnknownAtom: return "UnknownAtom";
    case ErrorCode::kUnknownDomainSize: return "UnknownDomainSize";
    case ErrorCode::kEmptyVector: return "EmptyVector";
    case ErrorCode::kDomainEmpty: return "DomainEmpty";
    case ErrorCode::kMemoryBudgetExceeded: return "MemoryBudgetExceeded";
    case ErrorCode::kEvidenceAtom: return "EvidenceAtom";
    case ErrorCode::kNoQueryAtoms: return "NoQueryAtoms";
    case ErrorCode::kTooManyAtoms: return "TooManyAtoms";
    case ErrorCode::kNonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::kInvalidSize: return "InvalidSize";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Error";
}

Error::Error(ErrorCode code, const std::string& message, int line, int column)
    : std::runtime_error(Decorate(code, message, line, column)),
      code_(code),
      line_(line),
      column_(column) {}

}  // namespace damln
