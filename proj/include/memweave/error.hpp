#pragma once

#include <stdexcept>
#include <string>

namespace memweave {

// Root of everything the library throws. The CLI maps the two branches below
// onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: unreadable file, bad JSON, bad mix/weights grammar.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that breaks a type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A bandwidth lookup the calibration data cannot answer.
class CalibrationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutOfCalibrationRange : public CalibrationError {
 public:
  using CalibrationError::CalibrationError;
};

class MissingWriteKindFamily : public CalibrationError {
 public:
  using CalibrationError::CalibrationError;
};

// Offered load the memory system cannot carry.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class InfeasibleLoad : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

class NoFeasibleWeights : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

}  // namespace memweave
