#pragma once

#include <stdexcept>
#include <string>

namespace rotcon {

enum class ErrorKind {
  InvalidArgument,  // precondition or dimension guard violated by the caller
  InputData,        // malformed file or invariant violation in loaded data
  Numerical,        // non-finite values, branch failures, projection failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace rotcon
