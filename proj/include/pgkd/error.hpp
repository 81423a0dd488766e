#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace pgkd {

enum class ErrorKind {
  invalid_argument,  // bad parameter or config value
  contract,          // precondition violated by the caller
  data,              // malformed input data (files, shapes, ids)
  io,                // filesystem failures
  runtime,           // divergence, internal failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {
inline void format_parts(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_parts(std::ostringstream& os, const T& head, const Rest&... rest) {
  os << head;
  format_parts(os, rest...);
}
}  // namespace detail

template <typename... Parts>
[[noreturn]] void fail(ErrorKind kind, const Parts&... parts) {
  std::ostringstream os;
  detail::format_parts(os, parts...);
  throw Error(kind, os.str());
}

template <typename... Parts>
void check(bool cond, ErrorKind kind, const Parts&... parts) {
  if (!cond) fail(kind, parts...);
}

}  // namespace pgkd
