#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cubicdyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class InvalidSimplexPoint : public Error {
 public:
  using Error::Error;
};

class NotVolterra : public Error {
 public:
  NotVolterra() : Error("tensor is not Volterra") {}
};

class NotSymmetric : public Error {
 public:
  NotSymmetric() : Error("tensor is not symmetric in (i,j,k)") {}
};

class InvalidPartition : public Error {
 public:
  using Error::Error;
};

class KernelUnavailable : public Error {
 public:
  KernelUnavailable(long s, long t)
      : Error("kernel P[" + std::to_string(s) + "," + std::to_string(t) +
              "] is not available") {}
};

class InvalidTimeSplit : public Error {
 public:
  InvalidTimeSplit(double s, double tau, double t)
      : Error("invalid time split s=" + std::to_string(s) +
              " tau=" + std::to_string(tau) + " t=" + std::to_string(t) +
              " (both gaps must be >= 1)") {}
};

class InvalidTimeGap : public Error {
 public:
  InvalidTimeGap(double s, double t)
      : Error("time gap t-s=" + std::to_string(t - s) + " is below 1") {}
};

class QuadratureBudgetExceeded : public Error {
 public:
  QuadratureBudgetExceeded(double needed, double budget)
      : Error("quadrature needs " + std::to_string(needed) +
              " evaluations, budget is " + std::to_string(budget)) {}
};

class UndefinedAtNonIntegerGap : public Error {
 public:
  UndefinedAtNonIntegerGap()
      : Error("kernel family is defined at integer times only") {}
};

/// Malformed input text. `line` is 1-based; 0 means "whole input".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("parse error at line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cubicdyn
