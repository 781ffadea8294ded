#pragma once

#include <stdexcept>
#include <string>

namespace leakaudit {

// Failure categories; the CLI maps them onto process exit codes.
enum class ErrorKind {
  usage,  // bad arguments or a violated precondition
  data,   // malformed or inconsistent input content
  io,     // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_usage(const std::string& message);
[[noreturn]] void throw_data(const std::string& message);
[[noreturn]] void throw_io(const std::string& message);

int exit_code_for(ErrorKind kind) noexcept;

}  // namespace leakaudit
