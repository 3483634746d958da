#include "triblock/error.hpp"

namespace triblock {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::singular_input: return "singular_input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::budget_exceeded: return "budget_exceeded";
    case ErrorKind::overlap: return "overlap";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace triblock
