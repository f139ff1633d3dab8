#pragma once

#include <stdexcept>
#include <string>

namespace gapest {

enum class ErrorCode {
  invalid_argument = 1,
  parse,
  domain,
  no_data,
  divergent,
  io,
};

/// Library-wide exception. The C API maps `code()` one-to-one onto
/// `gapest_status` values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::invalid_argument, what);
}

}  // namespace gapest
