#ifndef KCFGRL_ERROR_HPP
#define KCFGRL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace kcfgrl {

enum class ErrorKind {
  Data,   // malformed or invariant-violating input data
  Io,     // unreadable/unwritable files, transport failures
  Usage,  // caller misuse (bad flag combinations, dimension mismatch)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_data(std::string msg) { throw Error(ErrorKind::Data, std::move(msg)); }
[[noreturn]] inline void throw_io(std::string msg) { throw Error(ErrorKind::Io, std::move(msg)); }
[[noreturn]] inline void throw_usage(std::string msg) { throw Error(ErrorKind::Usage, std::move(msg)); }

}  // namespace kcfgrl

#endif
