#pragma once

#include <stdexcept>
#include <string>

namespace ndgd {

// Broad failure categories; the CLI maps each to a distinct exit code.
enum class ErrorCategory {
  Validation,
  Runtime,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

struct RuntimeFailure : Error {
  explicit RuntimeFailure(const std::string& what) : Error(ErrorCategory::Runtime, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

inline int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Validation: return 2;
    case ErrorCategory::Runtime: return 3;
    case ErrorCategory::Io: return 4;
  }
  return 1;
}

}  // namespace ndgd
