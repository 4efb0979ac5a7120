#pragma once

#include <stdexcept>
#include <string>

namespace memaudit {

// Usage-level problems: bad flag values, out-of-range parameters.
class InvalidParameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent data: unreadable files, mismatched inputs.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A score that has no defined value for the given inputs (e.g. ROUGE on an
// empty reference). Callers usually convert this into a flagged null field.
class UndefinedScore : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Fewer usable observations than the estimator needs.
class InsufficientData : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A statistical test whose inputs admit no decision (e.g. all paired
// differences are zero).
class DegenerateSample : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant. Mapped to exit code 3 by the CLI.
class InternalError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

inline void internal_check(bool cond, const char* what) {
  if (!cond) throw InternalError(what);
}

}  // namespace memaudit
