#ifndef STARSPEC_RATIONAL_HPP
#define STARSPEC_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <string>

#include "starspec/errors.hpp"

namespace starspec {

/// Arbitrary-precision exact rational; all symbol coefficients live here.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Exact rational from a double (every finite double is a binary rational).
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw Error("cannot convert non-finite double to rational");
  if (v == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(v, &exp);  // v = mant * 2^exp, |mant| in [0.5, 1)
  // 53 doublings make the mantissa integral.
  auto mant_int = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  Rational r(mant_int);
  if (exp > 0) {
    r *= Rational(BigInt(1) << exp);
  } else if (exp < 0) {
    r /= Rational(BigInt(1) << (-exp));
  }
  return r;
}

inline double to_double(const Rational& r) { return static_cast<double>(r); }

/// Recovers the decimal a user most plausibly wrote: if v is within one ulp
/// of k/10^e for some e <= 9, returns that fraction; otherwise the exact
/// binary value.  Intended for configuration inputs, where "0.1" means the
/// decimal one-tenth.
inline Rational rational_from_decimal(double v) {
  if (!std::isfinite(v)) throw Error("cannot convert non-finite double to rational");
  double scale = 1.0;
  for (int e = 0; e <= 9; ++e) {
    const double scaled = v * scale;
    const double rounded = std::nearbyint(scaled);
    if (std::abs(rounded) < 9.007199254740992e15 &&
        std::abs(scaled - rounded) <= 4.0 * std::abs(scaled) * std::numeric_limits<double>::epsilon()) {
      Rational r(static_cast<std::int64_t>(rounded));
      for (int k = 0; k < e; ++k) r /= 10;
      if (to_double(r) == v) return r;
    }
    scale *= 10.0;
  }
  return rational_from_double(v);
}

/// Complex number with exact rational real and imaginary parts.
struct RationalComplex {
  Rational re{0};
  Rational im{0};

  RationalComplex() = default;
  RationalComplex(Rational real) : re(std::move(real)) {}  // NOLINT implicit by design
  RationalComplex(Rational real, Rational imag) : re(std::move(real)), im(std::move(imag)) {}
  RationalComplex(long real) : re(real) {}  // NOLINT
  RationalComplex(long real, long imag) : re(real), im(imag) {}

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }

  RationalComplex operator-() const { return {-re, -im}; }

  RationalComplex& operator+=(const RationalComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  RationalComplex& operator-=(const RationalComplex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  RationalComplex& operator*=(const RationalComplex& o) {
    Rational r = re * o.re - im * o.im;
    Rational i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
  }

  friend RationalComplex operator+(RationalComplex a, const RationalComplex& b) { return a += b; }
  friend RationalComplex operator-(RationalComplex a, const RationalComplex& b) { return a -= b; }
  friend RationalComplex operator*(RationalComplex a, const RationalComplex& b) { return a *= b; }
  friend bool operator==(const RationalComplex& a, const RationalComplex& b) {
    return a.re == b.re && a.im == b.im;
  }

  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
};

/// The imaginary unit as an exact coefficient.
inline RationalComplex rc_i() { return {Rational(0), Rational(1)}; }

inline Rational binomial(int n, int k) {
  if (k < 0 || k > n) return Rational(0);
  BigInt r = 1;
  for (int i = 0; i < k; ++i) {
    r *= (n - i);
    r /= (i + 1);
  }
  return Rational(r);
}

inline Rational factorial(int n) {
  BigInt r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return Rational(r);
}

/// Canonical "num/den" rendering (den always printed, sign on the numerator).
inline std::string rational_to_string(const Rational& r) {
  std::ostringstream os;
  os << numerator(r) << '/' << denominator(r);
  return os.str();
}

/// Parses "num/den" or a bare integer "num".
inline Rational rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(s));
    BigInt num(s.substr(0, slash));
    BigInt den(s.substr(slash + 1));
    if (den == 0) throw Error("rational with zero denominator: " + s);
    return Rational(num, den);
  } catch (const std::runtime_error&) {
    throw Error("malformed rational: '" + s + "'");
  }
}

}  // namespace starspec

#endif  // STARSPEC_RATIONAL_HPP
