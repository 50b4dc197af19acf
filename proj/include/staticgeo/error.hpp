#pragma once

#include <stdexcept>
#include <string>

namespace staticgeo {

enum class ErrorKind {
  InvalidArgument,
  UnknownName,
  OutsideDomain,
  Degenerate,
  Precondition,
  NonConvergence,
  Io,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this exception; `kind()` lets
// callers (the suite runner in particular) turn them into failed records.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace staticgeo
