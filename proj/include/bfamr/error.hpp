#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bfamr {

// Base for all library errors. Subclasses map onto CLI exit codes:
// UserError and ParseError -> 1, IoError -> 2, anything else -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UserError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public UserError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : UserError(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace bfamr
