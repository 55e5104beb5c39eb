#pragma once

#include <stdexcept>
#include <string>

namespace perfsage {

enum class ErrorCode {
  kMalformedInput,   // unreadable or schema-violating document
  kUnknownOp,        // operator name outside the closed enumeration
  kVersionMismatch,  // schema/format version differs from this build
  kInvalidArgument,  // caller violated a precondition
  kDivergence,       // training produced a non-finite loss
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace perfsage
