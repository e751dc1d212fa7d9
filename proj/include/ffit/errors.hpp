#pragma once

#include <stdexcept>
#include <string>

namespace ffit {

// Error categories map 1:1 onto CLI exit codes and C API status codes.
enum class ErrorCode {
  Usage = 1,    // bad arguments, malformed model file, grammar errors
  Data = 2,     // missing files, bad CSV, unknown columns
  Numeric = 3,  // degenerate PDFs, invalid parameters, non-convergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ffit
