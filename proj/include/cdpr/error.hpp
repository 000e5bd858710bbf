#pragma once

#include <stdexcept>
#include <string>

namespace cdpr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (JSON syntax, wrong types, unknown keys).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A robot description or config violates one of its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Cable lengths with no real forward-kinematics solution.
class NoSolution : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Zero-length cable or rank-deficient structure matrix.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

class DegenerateSignal : public Error {
 public:
  using Error::Error;
};

/// Wire-protocol violation (bad magic, unknown version, truncated frame,
/// unexpected message in the session state machine).
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, int code = 0) : Error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

/// Socket-level failure: connect refused, peer closed, I/O error.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdpr
