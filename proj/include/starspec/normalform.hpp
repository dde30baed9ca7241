#ifndef STARSPEC_NORMALFORM_HPP
#define STARSPEC_NORMALFORM_HPP

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "starspec/dynamics.hpp"
#include "starspec/errors.hpp"
#include "starspec/linear_symplectic.hpp"
#include "starspec/polysym.hpp"

namespace starspec {

/// Coefficients of the classical normal form f0(A) = a1 A + a2 A^2 + ...
/// Exact rationals end to end; callers needing doubles use eval/coeff.
struct ActionSeries {
  std::vector<Rational> coeffs;  // coeffs[m-1] = a_m

  int order() const { return static_cast<int>(coeffs.size()); }
  Rational coeff(int m) const {
    if (m < 1 || m > order()) throw Error("ActionSeries: coefficient index out of range");
    return coeffs[m - 1];
  }
  double coeff_double(int m) const { return to_double(coeff(m)); }
  double eval(double a) const {
    double r = 0.0;
    for (int m = order(); m >= 1; --m) r = (r + to_double(coeffs[m - 1])) * a;
    return r;
  }
};

namespace detail {

/// Polynomial in complex coordinates z = x + ip, zb = x - ip, with exact
/// rational-complex coefficients; {z, zb} = -2i.
using ZPoly = std::map<std::pair<int, int>, RationalComplex>;

inline void zadd(ZPoly& s, std::pair<int, int> m, const RationalComplex& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = s.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) s.erase(it);
  }
}

inline ZPoly to_zpoly(const PolySymbol& s) {
  // x = (z + zb)/2,  p = -i z/2 + i zb/2
  if (s.hbar_order() > 0) throw Error("normal form expects an hbar-independent symbol");
  ZPoly out;
  const RationalComplex half(Rational(1, 2));
  const RationalComplex mi_half(Rational(0), Rational(-1, 2));
  const RationalComplex i_half(Rational(0), Rational(1, 2));
  for (const auto& [m, c] : s.terms()) {
    // expand ((z+zb)/2)^i  *  (-i z/2 + i zb/2)^j by binomials
    std::vector<RationalComplex> xpow;  // coefficient of z^a zb^(i-a)
    for (int a = 0; a <= m.x; ++a) {
      RationalComplex w(binomial(m.x, a));
      for (int t = 0; t < m.x; ++t) w *= half;
      xpow.push_back(w);
    }
    std::vector<RationalComplex> ppow;  // coefficient of z^b zb^(j-b)
    for (int b = 0; b <= m.p; ++b) {
      RationalComplex w(binomial(m.p, b));
      for (int t = 0; t < b; ++t) w *= mi_half;
      for (int t = 0; t < m.p - b; ++t) w *= i_half;
      ppow.push_back(w);
    }
    for (int a = 0; a <= m.x; ++a)
      for (int b = 0; b <= m.p; ++b)
        zadd(out, {a + b, (m.x - a) + (m.p - b)}, c * xpow[a] * ppow[b]);
  }
  return out;
}

inline ZPoly zmul(const ZPoly& a, const ZPoly& b) {
  ZPoly out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b)
      zadd(out, {ma.first + mb.first, ma.second + mb.second}, ca * cb);
  return out;
}

/// {F, G} = -2i (F_z G_zb - F_zb G_z), truncated at total degree max_deg.
inline ZPoly zpoisson(const ZPoly& f, const ZPoly& g, int max_deg) {
  ZPoly out;
  const RationalComplex m2i(Rational(0), Rational(-2));
  for (const auto& [mf, cf] : f) {
    for (const auto& [mg, cg] : g) {
      const int deg = mf.first + mf.second + mg.first + mg.second - 2;
      if (deg > max_deg) continue;
      // F_z G_zb
      if (mf.first > 0 && mg.second > 0) {
        RationalComplex c = cf * cg;
        c *= RationalComplex(Rational(mf.first) * Rational(mg.second));
        zadd(out, {mf.first - 1 + mg.first, mf.second + mg.second - 1}, m2i * c);
      }
      // - F_zb G_z
      if (mf.second > 0 && mg.first > 0) {
        RationalComplex c = cf * cg;
        c *= RationalComplex(Rational(mf.second) * Rational(mg.first));
        zadd(out, {mf.first + mg.first - 1, mf.second - 1 + mg.second}, -(m2i * c));
      }
    }
  }
  return out;
}

inline ZPoly ztruncate(const ZPoly& f, int max_deg) {
  ZPoly out;
  for (const auto& [m, c] : f)
    if (m.first + m.second <= max_deg) out.emplace(m, c);
  return out;
}

}  // namespace detail

/// Linear symplectic normalization of the quadratic part: returns (S, P o S)
/// with the quadratic part of the result equal to a1 (x^2 + p^2)/2,
/// a1 = sqrt(det Q).  S is a rotation onto the Hessian axes followed by a
/// reciprocal scaling, sign-normalized so the choice is deterministic.
/// Indefinite or singular quadratic parts are rejected.
inline std::pair<LinearSymplectic, PolySymbol> normalize_quadratic(const PolySymbol& poly) {
  if (!poly.coeff(0, 0).is_zero() || !poly.coeff(1, 0).is_zero() || !poly.coeff(0, 1).is_zero())
    throw Error("normalize_quadratic: constant and linear parts must vanish");

  const Rational qxx = poly.coeff(2, 0).re * 2;  // Hessian of the quadratic part
  const Rational qxp = poly.coeff(1, 1).re;
  const Rational qpp = poly.coeff(0, 2).re * 2;
  const Rational det = qxx * qpp - qxp * qxp;
  if (det <= 0 || qxx + qpp <= 0)
    throw NonElliptic("quadratic part is not positive definite (non-elliptic fixed point)");

  // already isotropic: stay exact, skip the floating rotation entirely
  if (qxp == 0 && qxx == qpp) return {LinearSymplectic::identity(), poly};

  Mat2 q{to_double(qxx), to_double(qxp), to_double(qpp)};
  double lo, hi;
  Vec2 v;
  detail::eig_sym2(q, lo, hi, v);
  const double s = std::pow(hi / lo, 0.25);
  // S = R * diag(s, 1/s) with R mapping e1 to the small-eigenvalue axis
  LinearSymplectic map{v.x * s, -v.p / s, v.p * s, v.x / s};

  PolySymbol out = apply_linear_symplectic(poly, map);
  // snap the quadratic part to its exact isotropic form (the residue is
  // floating-point roundoff of the irrational rotation entries)
  const Rational a1 = (out.coeff(2, 0).re + out.coeff(0, 2).re);
  out.set({2, 0, 0}, RationalComplex(a1 / 2));
  out.set({0, 2, 0}, RationalComplex(a1 / 2));
  out.set({1, 1, 0}, RationalComplex(Rational(0)));
  return {map, out};
}

/// Classical Birkhoff normal form to the requested order: eliminates
/// angle-dependent terms degree by degree in complex coordinates (1-D has no
/// resonance conditions) and returns the action polynomial a1 I + a2 I^2 + ...
/// All arithmetic is exact.
inline ActionSeries birkhoff_series(const PolySymbol& poly, int order) {
  if (order < 1) throw DegreeTooLow("birkhoff_series: order must be at least 1");
  if (poly.xp_degree() < 2) throw DegreeTooLow("birkhoff_series: quadratic part required");

  auto [map, norm] = normalize_quadratic(poly);
  const Rational a1 = norm.coeff(2, 0).re * 2;
  const int max_deg = 2 * order;

  detail::ZPoly h = detail::ztruncate(detail::to_zpoly(norm), max_deg);

  for (int d = 3; d <= max_deg; ++d) {
    // generator removing the non-resonant degree-d terms:
    // w_jk = -i h_jk / (a1 (j - k))
    detail::ZPoly gen;
    for (const auto& [m, c] : h) {
      if (m.first + m.second != d || m.first == m.second) continue;
      RationalComplex w = c * RationalComplex(Rational(0), Rational(-1));
      w *= RationalComplex(Rational(1) / (a1 * Rational(m.first - m.second)));
      gen.emplace(m, w);
    }
    if (gen.empty()) continue;
    // h <- exp(L_gen) h = h + {gen,h} + {gen,{gen,h}}/2! + ... (terminates
    // within the degree truncation since d >= 3)
    detail::ZPoly term = h;
    detail::ZPoly acc = h;
    for (int k = 1; k <= max_deg; ++k) {
      term = detail::zpoisson(gen, term, max_deg);
      if (term.empty()) break;
      const RationalComplex inv_fact(Rational(1) / factorial(k));
      for (const auto& [m, c] : term) detail::zadd(acc, m, c * inv_fact);
    }
    h = std::move(acc);
  }

  ActionSeries out;
  out.coeffs.assign(order, Rational(0));
  for (const auto& [m, c] : h) {
    if (m.first != m.second) continue;  // residual non-resonant terms beyond max_deg
    const int mm = m.first;
    if (mm < 1 || mm > order) continue;
    if (!c.is_real()) throw Error("birkhoff_series: resonant coefficient not real");
    // z^m zb^m = (2 I)^m
    out.coeffs[mm - 1] = c.re * Rational(BigInt(1) << mm);
  }
  return out;
}

}  // namespace starspec

#endif  // STARSPEC_NORMALFORM_HPP
