#ifndef STARSPEC_POLYSYM_HPP
#define STARSPEC_POLYSYM_HPP

#include <algorithm>
#include <array>
#include <compare>
#include <complex>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "starspec/errors.hpp"
#include "starspec/rational.hpp"

namespace starspec {

enum class Var { x, p };

/// Exponent triple of one term: x^i p^j hbar^k.
struct Monomial {
  int x = 0;
  int p = 0;
  int h = 0;

  auto operator<=>(const Monomial&) const = default;
  int xp_degree() const { return x + p; }
};

/// Sparse polynomial in (x, p, hbar) with exact rational-complex coefficients.
///
/// Terms are kept in a sorted map with no stored zeros, so iteration order and
/// serialized output are reproducible byte-for-byte.  All ring operations are
/// exact; floating point enters only through eval().
class PolySymbol {
 public:
  using TermMap = std::map<Monomial, RationalComplex>;

  PolySymbol() = default;

  static PolySymbol zero() { return {}; }
  static PolySymbol constant(RationalComplex c) {
    PolySymbol s;
    s.set({0, 0, 0}, std::move(c));
    return s;
  }
  static PolySymbol term(int i, int j, int k, RationalComplex c) {
    PolySymbol s;
    s.set({i, j, k}, std::move(c));
    return s;
  }
  static PolySymbol var_x() { return term(1, 0, 0, Rational(1)); }
  static PolySymbol var_p() { return term(0, 1, 0, Rational(1)); }
  /// The harmonic-oscillator action (x^2 + p^2)/2.
  static PolySymbol action() {
    PolySymbol s;
    s.set({2, 0, 0}, Rational(1, 2));
    s.set({0, 2, 0}, Rational(1, 2));
    return s;
  }

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }

  RationalComplex coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? RationalComplex{} : it->second;
  }
  RationalComplex coeff(int i, int j, int k = 0) const { return coeff({i, j, k}); }

  void set(const Monomial& m, RationalComplex c) {
    if (m.x < 0 || m.p < 0 || m.h < 0) throw Error("negative exponent in monomial");
    if (c.is_zero())
      terms_.erase(m);
    else
      terms_[m] = std::move(c);
  }

  void add_term(const Monomial& m, const RationalComplex& c) {
    if (m.x < 0 || m.p < 0 || m.h < 0) throw Error("negative exponent in monomial");
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  /// Total degree in (x, p); -1 for the zero symbol.
  int xp_degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.xp_degree());
    return d;
  }

  /// Highest power of hbar present; 0 for the zero symbol.
  int hbar_order() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.h);
    return d;
  }

  bool is_real() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const auto& t) { return t.second.is_real(); });
  }

  PolySymbol operator-() const {
    PolySymbol r;
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
    return r;
  }

  PolySymbol& operator+=(const PolySymbol& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  PolySymbol& operator-=(const PolySymbol& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }

  friend PolySymbol operator+(PolySymbol a, const PolySymbol& b) { return a += b; }
  friend PolySymbol operator-(PolySymbol a, const PolySymbol& b) { return a -= b; }

  friend PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
    PolySymbol r;
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_)
        r.add_term({ma.x + mb.x, ma.p + mb.p, ma.h + mb.h}, ca * cb);
    return r;
  }

  PolySymbol& operator*=(const PolySymbol& o) { return *this = *this * o; }

  friend PolySymbol operator*(const RationalComplex& c, const PolySymbol& a) {
    PolySymbol r;
    if (c.is_zero()) return r;
    for (const auto& [m, cc] : a.terms_) r.terms_.emplace(m, c * cc);
    return r;
  }
  friend PolySymbol operator*(const PolySymbol& a, const RationalComplex& c) { return c * a; }

  friend bool operator==(const PolySymbol& a, const PolySymbol& b) {
    return a.terms_ == b.terms_;
  }

  PolySymbol pow(int n) const {
    if (n < 0) throw Error("negative power of a polynomial symbol");
    PolySymbol r = constant(Rational(1));
    for (int k = 0; k < n; ++k) r *= *this;
    return r;
  }

  /// Term-wise exact partial derivative; the hbar grading is untouched.
  PolySymbol derive(Var v) const {
    PolySymbol r;
    for (const auto& [m, c] : terms_) {
      if (v == Var::x) {
        if (m.x > 0) r.add_term({m.x - 1, m.p, m.h}, c * RationalComplex(Rational(m.x)));
      } else {
        if (m.p > 0) r.add_term({m.x, m.p - 1, m.h}, c * RationalComplex(Rational(m.p)));
      }
    }
    return r;
  }

  /// Repeated derivative d^i/dx^i d^j/dp^j.
  PolySymbol derive(int i, int j) const {
    PolySymbol r = *this;
    for (int k = 0; k < i; ++k) r = r.derive(Var::x);
    for (int k = 0; k < j; ++k) r = r.derive(Var::p);
    return r;
  }

  /// Multiply by hbar^k (shifts the grading).
  PolySymbol shift_hbar(int k) const {
    PolySymbol r;
    for (const auto& [m, c] : terms_) r.terms_.emplace(Monomial{m.x, m.p, m.h + k}, c);
    return r;
  }

  /// Keep only terms with hbar power <= k.
  PolySymbol truncate_hbar(int k) const {
    PolySymbol r;
    for (const auto& [m, c] : terms_)
      if (m.h <= k) r.terms_.emplace(m, c);
    return r;
  }

  /// Terms of exact total (x,p)-degree d.
  PolySymbol xp_homogeneous_part(int d) const {
    PolySymbol r;
    for (const auto& [m, c] : terms_)
      if (m.xp_degree() == d) r.terms_.emplace(m, c);
    return r;
  }

  /// Exact substitution x -> sxx*x + sxp*p, p -> spx*x + spp*p.
  PolySymbol compose_linear(const Rational& sxx, const Rational& sxp, const Rational& spx,
                            const Rational& spp) const {
    PolySymbol nx;  // image of x
    nx.add_term({1, 0, 0}, sxx);
    nx.add_term({0, 1, 0}, sxp);
    PolySymbol np;  // image of p
    np.add_term({1, 0, 0}, spx);
    np.add_term({0, 1, 0}, spp);

    int dx = 0, dp = 0;
    for (const auto& [m, c] : terms_) {
      dx = std::max(dx, m.x);
      dp = std::max(dp, m.p);
    }
    std::vector<PolySymbol> xpow(dx + 1), ppow(dp + 1);
    xpow[0] = constant(Rational(1));
    for (int k = 1; k <= dx; ++k) xpow[k] = xpow[k - 1] * nx;
    ppow[0] = constant(Rational(1));
    for (int k = 1; k <= dp; ++k) ppow[k] = ppow[k - 1] * np;

    PolySymbol r;
    for (const auto& [m, c] : terms_) {
      PolySymbol t = xpow[m.x] * ppow[m.p];
      for (const auto& [tm, tc] : t.terms())
        r.add_term({tm.x, tm.p, tm.h + m.h}, tc * c);
    }
    return r;
  }

  /// Exact-coefficient evaluation; Horner in x, then in p, per hbar power.
  /// Real coefficients and real inputs give an imaginary part that is exactly zero.
  std::complex<double> eval(double x, double p, double hbar) const {
    if (terms_.empty()) return {0.0, 0.0};
    double re = 0.0, im = 0.0;
    // Terms are sorted by (x, p, h); walk x-powers from the highest down for Horner.
    int max_x = 0, max_p = 0, max_h = 0;
    for (const auto& [m, c] : terms_) {
      max_x = std::max(max_x, m.x);
      max_p = std::max(max_p, m.p);
      max_h = std::max(max_h, m.h);
    }
    std::vector<double> ppow(max_p + 1, 1.0), hpow(max_h + 1, 1.0);
    for (int k = 1; k <= max_p; ++k) ppow[k] = ppow[k - 1] * p;
    for (int k = 1; k <= max_h; ++k) hpow[k] = hpow[k - 1] * hbar;

    // Horner over x: accumulate coefficient-of-x^i sums from the sorted map.
    auto it = terms_.rbegin();
    for (int i = max_x; i >= 0; --i) {
      double row_re = 0.0, row_im = 0.0;
      while (it != terms_.rend() && it->first.x == i) {
        const double w = ppow[it->first.p] * hpow[it->first.h];
        row_re += to_double(it->second.re) * w;
        row_im += to_double(it->second.im) * w;
        ++it;
      }
      re = re * x + row_re;
      im = im * x + row_im;
    }
    return {re, im};
  }

  /// Sorted "i j k num/den [num/den]" lines; the imaginary pair is emitted
  /// only when nonzero.
  std::string serialize() const {
    std::ostringstream os;
    for (const auto& [m, c] : terms_) {
      os << m.x << ' ' << m.p << ' ' << m.h << ' ' << rational_to_string(c.re);
      if (c.im != 0) os << ' ' << rational_to_string(c.im);
      os << '\n';
    }
    return os.str();
  }

  static PolySymbol parse(std::istream& in) {
    PolySymbol s;
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      int i = 0, j = 0, k = 0;
      std::string re_s, im_s;
      if (!(ls >> i >> j >> k >> re_s)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw Error("malformed symbol line: '" + line + "'");
      }
      RationalComplex c(rational_from_string(re_s));
      if (ls >> im_s) c.im = rational_from_string(im_s);
      s.add_term({i, j, k}, c);
    }
    return s;
  }

  static PolySymbol parse(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  friend std::ostream& operator<<(std::ostream& os, const PolySymbol& s) {
    return os << s.serialize();
  }

 private:
  TermMap terms_;
};

}  // namespace starspec

#endif  // STARSPEC_POLYSYM_HPP
