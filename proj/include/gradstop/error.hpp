#pragma once

#include <stdexcept>
#include <string>

namespace gradstop {

// Error families map one-to-one onto the CLI exit codes.
enum class ErrorKind { Config = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class MissingFileError : public DataError {
 public:
  explicit MissingFileError(const std::string& path)
      : DataError("cannot open file: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Non-numeric or malformed cell. Row and column are 1-based data coordinates
/// (row 1 is the first line after the header).
class ParseError : public DataError {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& cell)
      : DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row) + ", column " +
                  std::to_string(col)),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class LabelError : public DataError {
 public:
  LabelError(std::size_t row, const std::string& cell)
      : DataError("label must be 0 or 1, got '" + cell + "' at row " + std::to_string(row)),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Shape mismatches and violated preconditions on numeric inputs.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

}  // namespace gradstop
