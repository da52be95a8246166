#pragma once

#include <stdexcept>
#include <string>

namespace conelq {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed something outside an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Problem data is malformed (non-finite entries, dimension mismatch, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Problem configuration could not be read; `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The saddle problem is not convex in v1 / concave in v2 at a snapshot.
class CurvatureError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Backward integration left the guard band.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, int node) : Error(what), node_(node) {}
  int node() const noexcept { return node_; }

 private:
  int node_;
};

/// A computed quantity became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace conelq
