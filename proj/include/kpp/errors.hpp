#pragma once

#include <stdexcept>
#include <string>

namespace kpp {

// Coarse error categories; the C API and the CLI exit codes map onto these.
enum class errc {
  invalid_argument,
  hypothesis_violation,
  numerical_failure,
  config_error,
  io_error,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace kpp
