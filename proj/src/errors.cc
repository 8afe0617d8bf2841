#include "tabfe/errors.h"

namespace tabfe {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownColumn:
      return "UnknownColumn";
    case ErrorCode::kDuplicateSelection:
      return "DuplicateSelection";
    case ErrorCode::kRowCountMismatch:
      return "RowCountMismatch";
    case ErrorCode::kDuplicateColumn:
      return "DuplicateColumn";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kKindMismatch:
      return "KindMismatch";
    case ErrorCode::kParseError:
      return "ParseError";
    case ErrorCode::kMissingTarget:
      return "MissingTarget";
    case ErrorCode::kRaggedRow:
      return "RaggedRow";
    case ErrorCode::kMissingScoreColumn:
      return "MissingScoreColumn";
    case ErrorCode::kNonFiniteScore:
      return "NonFiniteScore";
    case ErrorCode::kIoError:
      return "IoError";
    case ErrorCode::kAllMissingColumn:
      return "AllMissingColumn";
    case ErrorCode::kNegativeBeyondDomain:
      return "NegativeBeyondDomain";
    case ErrorCode::kMissingFolds:
      return "MissingFolds";
    case ErrorCode::kCardinalityExceeded:
      return "CardinalityExceeded";
    case ErrorCode::kEmptyDictionary:
      return "EmptyDictionary";
    case ErrorCode::kOrderTooSmall:
      return "OrderTooSmall";
    case ErrorCode::kNonBinary:
      return "NonBinary";
    case ErrorCode::kDegenerateColumn:
      return "DegenerateColumn";
    case ErrorCode::kZeroVariance:
      return "ZeroVariance";
    case ErrorCode::kWrongTask:
      return "WrongTask";
    case ErrorCode::kMissingValues:
      return "MissingValues";
    case ErrorCode::kTooManyComponents:
      return "TooManyComponents";
    case ErrorCode::kKTooLarge:
      return "KTooLarge";
    case ErrorCode::kSchemaViolation:
      return "SchemaViolation";
    case ErrorCode::kIllegalScopeForKind:
      return "IllegalScopeForKind";
    case ErrorCode::kUnknownOperator:
      return "UnknownOperator";
    case ErrorCode::kScopeDataMissing:
      return "ScopeDataMissing";
    case ErrorCode::kSchemaMismatch:
      return "SchemaMismatch";
    case ErrorCode::kTooFewRows:
      return "TooFewRows";
    case ErrorCode::kTooFewGroups:
      return "TooFewGroups";
    case ErrorCode::kWrongTaskForStrategy:
      return "WrongTaskForStrategy";
    case ErrorCode::kNonFiniteInput:
      return "NonFiniteInput";
    case ErrorCode::kEmptyValidation:
      return "EmptyValidation";
    case ErrorCode::kFeatureCountMismatch:
      return "FeatureCountMismatch";
    case ErrorCode::kExternalFailed:
      return "ExternalFailed";
    case ErrorCode::kMalformedPrediction:
      return "MalformedPrediction";
    case ErrorCode::kInvalidBounds:
      return "InvalidBounds";
    case ErrorCode::kEmptyCategorical:
      return "EmptyCategorical";
    case ErrorCode::kEmptySpace:
      return "EmptySpace";
    case ErrorCode::kAllTrialsFailed:
      return "AllTrialsFailed";
    case ErrorCode::kSingleClass:
      return "SingleClass";
    case ErrorCode::kNonFinite:
      return "NonFinite";
    case ErrorCode::kShapeMismatch:
      return "ShapeMismatch";
    case ErrorCode::kDegenerateConstantVector:
      return "DegenerateConstantVector";
    case ErrorCode::kEmptyMatrix:
      return "EmptyMatrix";
    case ErrorCode::kInvalidConfig:
      return "InvalidConfig";
    case ErrorCode::kRunDirNotEmpty:
      return "RunDirNotEmpty";
  }
  return "Unknown";
}

}  // namespace tabfe
