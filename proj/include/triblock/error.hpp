#pragma once

#include <stdexcept>
#include <string>

namespace triblock {

enum class ErrorKind {
  invalid_input,
  singular_input,
  domain,
  convergence,
  budget_exceeded,
  overlap,
  io,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace triblock
