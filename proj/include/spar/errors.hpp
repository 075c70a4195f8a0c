#pragma once

#include <stdexcept>
#include <string>

namespace spar {

class SparError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration. Also raised for measure/family mismatch.
class ConfigError : public SparError {
 public:
  using SparError::SparError;
};

// Argument outside the domain of a link or family.
class DomainError : public SparError {
 public:
  DomainError(const std::string& what, long index = -1)
      : SparError(index >= 0 ? what + " (at index " + std::to_string(index) + ")" : what),
        index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

class InsufficientDataError : public SparError {
 public:
  using SparError::SparError;
};

// Unpenalized system without a unique solution; retry with a positive penalty.
class SingularError : public SparError {
 public:
  using SparError::SparError;
};

class NumericalError : public SparError {
 public:
  using SparError::SparError;
};

class CvError : public SparError {
 public:
  using SparError::SparError;
};

class ParseError : public SparError {
 public:
  ParseError(const std::string& what, long row = -1, long col = -1)
      : SparError(row >= 0 ? what + " (row " + std::to_string(row) + ", column " +
                                 std::to_string(col) + ")"
                           : what),
        row_(row),
        col_(col) {}
  long row() const { return row_; }
  long col() const { return col_; }

 private:
  long row_;
  long col_;
};

class SchemaError : public SparError {
 public:
  using SparError::SparError;
};

class VersionError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

}  // namespace spar
