#include "hexmorph/errors.hpp"

namespace hexmorph {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config error";
    case ErrorKind::format: return "format error";
    case ErrorKind::unsupported: return "unsupported feature";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::data: return "data error";
    case ErrorKind::degenerate_input: return "degenerate input";
    case ErrorKind::out_of_domain: return "out of domain";
    case ErrorKind::incompatible_grids: return "incompatible grids";
    case ErrorKind::undefined_metric: return "undefined metric";
    case ErrorKind::optimization_failure: return "optimization failure";
  }
  return "error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
      return 1;
    case ErrorKind::optimization_failure:
      return 3;
    default:
      return 2;
  }
}

}  // namespace hexmorph
