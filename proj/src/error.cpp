#include "leakaudit/error.hpp"

namespace leakaudit {

void throw_usage(const std::string& message) { throw Error(ErrorKind::usage, message); }
void throw_data(const std::string& message) { throw Error(ErrorKind::data, message); }
void throw_io(const std::string& message) { throw Error(ErrorKind::io, message); }

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage:
      return 2;
    case ErrorKind::data:
      return 3;
    case ErrorKind::io:
      return 4;
  }
  return 1;
}

}  // namespace leakaudit
