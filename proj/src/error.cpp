#include "error.hpp"

namespace shapefit {

const char* to_string(ErrorCode code)
{
   switch (code) {
   case ErrorCode::invalid_argument:
      return "invalid_argument";
   case ErrorCode::parse_error:
      return "parse_error";
   case ErrorCode::io_error:
      return "io_error";
   case ErrorCode::version_mismatch:
      return "version_mismatch";
   case ErrorCode::infeasible:
      return "infeasible";
   case ErrorCode::not_strictly_feasible:
      return "not_strictly_feasible";
   case ErrorCode::convergence_failure:
      return "convergence_failure";
   case ErrorCode::not_found:
      return "not_found";
   case ErrorCode::conflict:
      return "conflict";
   }
   return "unknown";
}

} // namespace shapefit
