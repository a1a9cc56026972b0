#pragma once

#include <stdexcept>
#include <string>

namespace shapefit {

enum class ErrorCode {
   invalid_argument,
   parse_error,
   io_error,
   version_mismatch,
   infeasible,
   not_strictly_feasible,
   convergence_failure,
   not_found,
   conflict,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
   Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code)
   {
   }

   ErrorCode code() const noexcept { return code_; }

private:
   ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
   throw Error(code, message);
}

inline void require(bool condition, const std::string& message)
{
   if (!condition) {
      throw Error(ErrorCode::invalid_argument, message);
   }
}

} // namespace shapefit
