#pragma once

#include <stdexcept>
#include <string>

namespace vre {

/// Broad failure classes. Each maps onto one CLI exit code.
enum class ErrorKind {
   validation, ///< malformed or invariant-violating input (exit 2)
   cloud,      ///< simulated provider refused an operation (exit 3)
   state,      ///< missing/inconsistent cluster or deploy-directory state (exit 4)
};

class Error : public std::runtime_error {
   public:
   Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
   ErrorKind kind() const noexcept { return kind_; }

   private:
   ErrorKind kind_;
};

class ValidationError : public Error {
   public:
   explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Document syntax error with a 1-based line/column position.
class SyntaxError : public ValidationError {
   public:
   SyntaxError(const std::string& what, int line, int column)
      : ValidationError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}
   int line() const noexcept { return line_; }
   int column() const noexcept { return column_; }

   private:
   int line_;
   int column_;
};

class CloudError : public Error {
   public:
   explicit CloudError(const std::string& what) : Error(ErrorKind::cloud, what) {}
};

class StateError : public Error {
   public:
   explicit StateError(const std::string& what) : Error(ErrorKind::state, what) {}
};

inline int exit_code_for(ErrorKind kind) {
   switch (kind) {
      case ErrorKind::validation: return 2;
      case ErrorKind::cloud: return 3;
      case ErrorKind::state: return 4;
   }
   return 1;
}

}
