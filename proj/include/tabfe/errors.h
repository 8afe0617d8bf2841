#ifndef TABFE_ERRORS_H_
#define TABFE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace tabfe {

enum class ErrorCode {
  // core-table
  kUnknownColumn,
  kDuplicateSelection,
  kRowCountMismatch,
  kDuplicateColumn,
  kLengthMismatch,
  kKindMismatch,
  // ingest-io
  kParseError,
  kMissingTarget,
  kRaggedRow,
  kMissingScoreColumn,
  kNonFiniteScore,
  kIoError,
  // fe-ops
  kAllMissingColumn,
  kNegativeBeyondDomain,
  kMissingFolds,
  kCardinalityExceeded,
  kEmptyDictionary,
  kOrderTooSmall,
  kNonBinary,
  kDegenerateColumn,
  kZeroVariance,
  kWrongTask,
  kMissingValues,
  kTooManyComponents,
  kKTooLarge,
  // pipeline-engine
  kSchemaViolation,
  kIllegalScopeForKind,
  kUnknownOperator,
  kScopeDataMissing,
  kSchemaMismatch,
  // folds-learners
  kTooFewRows,
  kTooFewGroups,
  kWrongTaskForStrategy,
  kNonFiniteInput,
  kEmptyValidation,
  kFeatureCountMismatch,
  kExternalFailed,
  kMalformedPrediction,
  // hpo
  kInvalidBounds,
  kEmptyCategorical,
  kEmptySpace,
  kAllTrialsFailed,
  // eval-report
  kSingleClass,
  kNonFinite,
  kShapeMismatch,
  kDegenerateConstantVector,
  kEmptyMatrix,
  // generic
  kInvalidConfig,
  kRunDirNotEmpty,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this type. `step()` is the
// pipeline step index when the error was raised inside a pipeline, else -1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int step = -1)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message),
        step_(step) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }
  int step() const { return step_; }

 private:
  ErrorCode code_;
  std::string detail_;
  int step_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tabfe

#endif  // TABFE_ERRORS_H_
