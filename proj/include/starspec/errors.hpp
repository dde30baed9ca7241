#ifndef STARSPEC_ERRORS_HPP
#define STARSPEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace starspec {

/// Base class for all starspec error conditions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Quadratic part of a symbol is indefinite or singular; no elliptic normal form exists.
class NonElliptic : public Error {
 public:
  explicit NonElliptic(const std::string& what) : Error(what) {}
};

/// Polynomial degree too low for the requested normal-form order.
class DegreeTooLow : public Error {
 public:
  explicit DegreeTooLow(const std::string& what) : Error(what) {}
};

/// Newton iteration on the gradient failed to converge.
class NoFixedPoint : public Error {
 public:
  explicit NoFixedPoint(const std::string& what) : Error(what) {}
};

/// Fixed point has a (near-)singular Hessian; the quantization rule does not apply.
class NonGeneric : public Error {
 public:
  explicit NonGeneric(const std::string& what) : Error(what) {}
};

/// Orbit integration exhausted its step budget without returning to the section.
class OrbitNotClosed : public Error {
 public:
  explicit OrbitNotClosed(const std::string& what) : Error(what) {}
};

/// Requested action or energy lies outside the declared working window.
class OutOfWindow : public Error {
 public:
  explicit OutOfWindow(const std::string& what) : Error(what) {}
};

/// Matrix is not symplectic (det != 1 within tolerance).
class NotSymplectic : public Error {
 public:
  explicit NotSymplectic(const std::string& what) : Error(what) {}
};

/// Matrix quantization failed to converge under resolution doubling.
class OracleDiverged : public Error {
 public:
  explicit OracleDiverged(const std::string& what) : Error(what) {}
};

/// Symbol is not bounded below as an operator; no discrete ground state.
class UnboundedSymbol : public Error {
 public:
  explicit UnboundedSymbol(const std::string& what) : Error(what) {}
};

/// Malformed configuration file or CLI arguments.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace starspec

#endif  // STARSPEC_ERRORS_HPP
