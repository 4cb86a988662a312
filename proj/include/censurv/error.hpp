#pragma once

#include <stdexcept>
#include <string>

namespace censurv {

// All library errors derive from Error. The CLI maps kinds to exit codes
// (validation -> 1, io -> 2).
class Error : public std::runtime_error {
 public:
  enum class Kind { validation, io };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& msg) {
  throw Error(Error::Kind::validation, msg);
}

[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(Error::Kind::io, msg);
}

}  // namespace censurv
