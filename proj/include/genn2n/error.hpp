#pragma once

#include <stdexcept>
#include <string>

namespace genn2n {

// Error categories map 1:1 onto CLI exit codes (see tools/genn2n.cpp).
enum class ErrorKind {
  shape,      // tensor/image dimension mismatch
  domain,     // math domain violation (log/sqrt of negative, bad range)
  config,     // unparseable or out-of-contract configuration
  io,         // missing/corrupt files
  numeric,    // NaN/divergence during optimization
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace genn2n
