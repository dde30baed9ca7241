#ifndef STARSPEC_MOYAL_HPP
#define STARSPEC_MOYAL_HPP

#include <vector>

#include "starspec/errors.hpp"
#include "starspec/polysym.hpp"
#include "starspec/rational.hpp"

namespace starspec {

// Sign convention: the Poisson tensor is fixed so that {x, p} = +1 and
// x * p = xp + i hbar/2, matching standard operator ordering under the Weyl
// transform.  Even-order brackets and everything the quantization rule uses
// are insensitive to this choice.

/// n-th order Moyal bracket: the n-fold contraction of n-th derivatives of A
/// and B through the Poisson tensor,
///   {A,B}_n = sum_k (-1)^(n-k) C(n,k) (dx^k dp^(n-k) A) (dx^(n-k) dp^k B).
/// n = 0 is the pointwise product, n = 1 the Poisson bracket.
inline PolySymbol moyal_bracket(const PolySymbol& a, const PolySymbol& b, int n) {
  if (n < 0) throw Error("moyal_bracket: negative order");
  if (n == 0) return a * b;
  PolySymbol r;
  for (int k = 0; k <= n; ++k) {
    PolySymbol da = a.derive(k, n - k);
    if (da.is_zero()) continue;
    PolySymbol db = b.derive(n - k, k);
    if (db.is_zero()) continue;
    RationalComplex c(binomial(n, k));
    if ((n - k) % 2 != 0) c = -c;
    r += c * (da * db);
  }
  return r;
}

inline PolySymbol poisson_bracket(const PolySymbol& a, const PolySymbol& b) {
  return moyal_bracket(a, b, 1);
}

/// Star product truncated in hbar, remembering whether the discarded tail
/// was identically zero (i.e. the series terminated naturally).
struct TruncatedStar {
  PolySymbol value;
  bool exact = true;  // true iff no nonzero terms were discarded
};

/// Full Moyal star product  A * B = sum_n (1/n!) (i hbar/2)^n {A,B}_n.
/// The series terminates once n exceeds min(deg A, deg B), so the result is
/// exact to all orders for polynomial symbols.
inline PolySymbol star(const PolySymbol& a, const PolySymbol& b) {
  PolySymbol r;
  const int nmax = std::min(a.xp_degree(), b.xp_degree());
  RationalComplex pref(Rational(1));                    // (i/2)^n / n!
  const RationalComplex half_i(Rational(0), Rational(1, 2));
  for (int n = 0; n <= nmax; ++n) {
    if (n > 0) {
      pref *= half_i;
      pref *= RationalComplex(Rational(1, n));
    }
    PolySymbol br = moyal_bracket(a, b, n);
    if (br.is_zero()) continue;
    r += (pref * br).shift_hbar(n);
  }
  return r;
}

inline TruncatedStar star(const PolySymbol& a, const PolySymbol& b, int max_hbar_order) {
  if (max_hbar_order < 0) throw Error("star: negative truncation order");
  PolySymbol full = star(a, b);
  TruncatedStar out;
  out.value = full.truncate_hbar(max_hbar_order);
  out.exact = (out.value == full);
  return out;
}

/// Symbol of the commutator:
///   [A,B]_* = i hbar ({A,B} - hbar^2/24 {A,B}_3 + hbar^4/1920 {A,B}_5 - ...),
/// equal to A*B - B*A exactly on polynomial symbols.
inline PolySymbol star_commutator(const PolySymbol& a, const PolySymbol& b) {
  PolySymbol r;
  const int nmax = std::min(a.xp_degree(), b.xp_degree());
  for (int n = 1; n <= nmax; n += 2) {
    PolySymbol br = moyal_bracket(a, b, n);
    if (br.is_zero()) continue;
    // 2 * (1/n!) (i/2)^n, with i^n = i * i^(n-1) and (n-1) even.
    RationalComplex c = rc_i();
    Rational mag = Rational(2) / (factorial(n) * Rational(BigInt(1) << n));
    if (((n - 1) / 2) % 2 != 0) mag = -mag;
    c *= RationalComplex(mag);
    r += (c * br).shift_hbar(n);
  }
  return r;
}

inline TruncatedStar star_commutator(const PolySymbol& a, const PolySymbol& b,
                                     int max_hbar_order) {
  PolySymbol full = star_commutator(a, b);
  TruncatedStar out;
  out.value = full.truncate_hbar(max_hbar_order);
  out.exact = (out.value == full);
  return out;
}

/// {H,H}_2 = 2 [H_xx H_pp - H_xp^2], twice the Hessian determinant.
/// For H = p^2/2m + V(x) this collapses to 2 V''(x)/m.
inline PolySymbol hessian_bracket(const PolySymbol& h) {
  PolySymbol hxx = h.derive(2, 0);
  PolySymbol hpp = h.derive(0, 2);
  PolySymbol hxp = h.derive(1, 1);
  return RationalComplex(Rational(2)) * (hxx * hpp - hxp * hxp);
}

/// Linear-chain diagram with A at every node:
///   A_xx A_p^2 - 2 A_xp A_x A_p + A_pp A_x^2
/// (two arrows feeding the doubly differentiated middle factor).
inline PolySymbol chain_diagram(const PolySymbol& a) {
  PolySymbol ax = a.derive(Var::x);
  PolySymbol ap = a.derive(Var::p);
  return a.derive(2, 0) * ap * ap - RationalComplex(Rational(2)) * (a.derive(1, 1) * ax * ap) +
         a.derive(0, 2) * ax * ax;
}

/// Composition f(A) for a polynomial f given by Taylor coefficients
/// f(t) = sum_k coeffs[k] t^k.
inline PolySymbol compose_series(const PolySymbol& a, const std::vector<Rational>& coeffs) {
  PolySymbol r;
  PolySymbol apow = PolySymbol::constant(Rational(1));
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (k > 0) apow *= a;
    if (coeffs[k] != 0) r += RationalComplex(coeffs[k]) * apow;
  }
  return r;
}

/// Derivative of the coefficient list: f -> f'.
inline std::vector<Rational> series_derivative(const std::vector<Rational>& coeffs) {
  std::vector<Rational> d;
  for (std::size_t k = 1; k < coeffs.size(); ++k) d.push_back(coeffs[k] * Rational(k));
  return d;
}

/// Symbol of f(op(A)) through order hbar^2:
///   f(A) - hbar^2 [ f''(A)/16 {A,A}_2 + f'''(A)/24 Chain(A) ].
/// Orders beyond 2 are not implemented (the hbar^4 term needs 13 diagrams).
inline PolySymbol symbol_of_function(const PolySymbol& a, const std::vector<Rational>& f,
                                     int hbar_order) {
  if (hbar_order != 0 && hbar_order != 2)
    throw Error("symbol_of_function: only hbar orders 0 and 2 are supported");
  PolySymbol r = compose_series(a, f);
  if (hbar_order == 2) {
    std::vector<Rational> f1 = series_derivative(f);
    std::vector<Rational> f2 = series_derivative(f1);
    std::vector<Rational> f3 = series_derivative(f2);
    PolySymbol corr =
        RationalComplex(Rational(1, 16)) * (compose_series(a, f2) * moyal_bracket(a, a, 2));
    corr += RationalComplex(Rational(1, 24)) * (compose_series(a, f3) * chain_diagram(a));
    r -= corr.shift_hbar(2);
  }
  return r;
}

}  // namespace starspec

#endif  // STARSPEC_MOYAL_HPP
