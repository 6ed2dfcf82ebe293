#ifndef GAIT_ERRORS_HPP
#define GAIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gait {

enum class ErrorCode {
  kMissingFile,
  kUnsupportedEncoding,
  kCorruptHeader,
  kSampleRateMismatch,
  kSignalTooShort,
  kDegenerateCovariance,
  kDimensionMismatch,
  kTooFewFrames,
  kNoValidPath,
  kAllPathsInvalid,
  kSchemaError,
  kMissingStepCount,
  kMismatchedRecordingSets,
  kIoError,
  kNumericalUnderflow,
  kInvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gait

#endif  // GAIT_ERRORS_HPP
