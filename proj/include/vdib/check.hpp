#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace vdib {

// Invalid or inconsistent user configuration (bad hyperparameter, unknown
// enum value, task/field mismatch). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. Carries the byte offset at which parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t byte_offset)
      : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) +
                           ")"),
        offset(byte_offset) {}
  size_t offset;
};

// Filesystem failure, annotated with the path involved. Exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
[[noreturn]] inline void check_failed(const char* expr, const char* file,
                                      int line, const std::string& msg) {
  std::ostringstream os;
  os << "contract violation: " << expr;
  if (!msg.empty()) os << " — " << msg;
  os << " [" << file << ":" << line << "]";
  throw std::invalid_argument(os.str());
}
}  // namespace detail

}  // namespace vdib

// Precondition / contract check. Throws std::invalid_argument on failure.
#define VDIB_CHECK(cond, ...)                                       \
  do {                                                              \
    if (!(cond)) {                                                  \
      ::vdib::detail::check_failed(#cond, __FILE__, __LINE__,       \
                                   ::std::string{"" __VA_ARGS__}); \
    }                                                               \
  } while (0)
