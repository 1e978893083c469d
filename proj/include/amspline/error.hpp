#pragma once
// Exception hierarchy shared by every amspline module.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace amspline {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Vector lengths that must agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of the function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The monotone curve never reaches the requested level inside the search range.
class NotAttained : public Error {
 public:
  using Error::Error;
};

class ToleranceError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeight : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Base of everything that is the input data's fault.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyDataset : public DataError {
 public:
  using DataError::DataError;
};

class MissingControl : public DataError {
 public:
  using DataError::DataError;
};

class IllPosedData : public DataError {
 public:
  using DataError::DataError;
};

// Optimizer gave up; carries the best parameters it found.
class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, std::vector<double> best)
      : Error(what), best_(std::move(best)) {}
  const std::vector<double>& best_params() const noexcept { return best_; }

 private:
  std::vector<double> best_;
};

}  // namespace amspline
