#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shotwright {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised while reading any of the text/binary file formats.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace shotwright
