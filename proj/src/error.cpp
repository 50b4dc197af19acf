#include "staticgeo/error.hpp"

namespace staticgeo {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::UnknownName: return "unknown_name";
    case ErrorKind::OutsideDomain: return "outside_domain";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace staticgeo
