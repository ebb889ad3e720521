#pragma once

#include <stdexcept>
#include <string>

namespace ctxmt {

// Base for every error the toolkit raises on purpose. The CLI maps the
// subclasses onto exit codes (config 2, data 3, numeric 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public DataError {
 public:
  AlignmentError(const std::string& what, std::size_t block)
      : DataError(what), block_(block) {}

  // 1-based number of the first offending block.
  std::size_t block() const { return block_; }

 private:
  std::size_t block_;
};

class LengthError : public DataError {
 public:
  using DataError::DataError;
};

class VocabMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  NumericError(const std::string& what, long step)
      : Error(what), step_(step) {}

  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace ctxmt
