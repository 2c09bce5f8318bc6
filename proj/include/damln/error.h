#ifndef DAMLN_ERROR_H_
#define DAMLN_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace damln {

enum class ErrorCode {
  kSyntaxError,
  kUnknownDomain,
  kUnknownPredicate,
  kArityMismatch,
  kTypeConflict,
  kDuplicatePredicate,
  kDuplicateLiteral,
  kIncompleteBinding,
  kWrongDomainConstant,
  kUnknownAtom,
  kUnknownDomainSize,
  kEmptyVector,
  kDomainEmpty,
  kMemoryBudgetExceeded,
  kEvidenceAtom,
  kNoQueryAtoms,
  kTooManyAtoms,
  kNonFiniteObjective,
  kInvalidSize,
  kNoPositives,
  kInvalidArgument,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All engine failures are reported through this type. Parse errors carry the
// 1-based line (and column when known); other errors leave them at 0.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int line = 0,
        int column = 0);

  ErrorCode code() const { return code_; }
  int line() const { return line_; }
  int column() const { return column_; }

  // Whether the failure stems from resource limits (memory, enumeration cap)
  // rather than bad input.
  bool is_resource_error() const {
    return code_ == ErrorCode::kMemoryBudgetExceeded ||
           code_ == ErrorCode::kTooManyAtoms;
  }

 private:
  ErrorCode code_;
  int line_;
  int column_;
};

}  // namespace damln

#endif  // DAMLN_ERROR_H_
