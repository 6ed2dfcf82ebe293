#include "gait/errors.hpp"

namespace gait {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kUnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kDegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kNoValidPath: return "NoValidPath";
    case ErrorCode::kAllPathsInvalid: return "AllPathsInvalid";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kMissingStepCount: return "MissingStepCount";
    case ErrorCode::kMismatchedRecordingSets: return "MismatchedRecordingSets";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kNumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace gait
