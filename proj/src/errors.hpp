#ifndef DCRL_ERRORS_HPP_
#define DCRL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dcrl {

// Error categories shared by every module. The C API maps these onto
// dcrl_status codes one to one.
enum class ErrorCode {
  kConfig,          // invalid configuration value
  kNumericalFault,  // NaN/Inf in state, command or network output
  kContract,        // call made in the wrong state (step after done, ...)
  kIo,              // file could not be opened or written
  kParse,           // malformed file content
  kSpacing,         // weather samples not uniformly spaced
  kRange,           // value outside its declared physical range
  kUnknownTag,      // weather location tag not recognised
  kProtocol,        // bridge message violates the framing rules
  kTruncated,       // bridge stream closed in the middle of a message
  kChildExit,       // simulator process exited or crashed
  kTimeout,         // bridge peer did not answer in time
  kSpawn,           // simulator process could not be started
  kTagMismatch,     // two reports do not cover the same weather tags
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dcrl

#endif  // DCRL_ERRORS_HPP_
