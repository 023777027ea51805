// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sxf {

// Error categories map one-to-one onto CLI exit codes and onto the
// machine-parsable "error <category>: ..." line printed on failure.
enum class ErrorCategory {
  usage = 2,
  io = 3,
  format = 4,
  shape = 5,
  domain = 6,
  missing_guidance = 7,
  nan = 8,
  internal = 9,
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::missing_guidance: return "missing-guidance";
    case ErrorCategory::nan: return "nan";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }
  int exit_code() const { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void raise(ErrorCategory c, const std::string& msg) {
  throw Error(c, msg);
}

}  // namespace sxf
