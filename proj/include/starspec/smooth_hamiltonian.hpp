#ifndef STARSPEC_SMOOTH_HAMILTONIAN_HPP
#define STARSPEC_SMOOTH_HAMILTONIAN_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "starspec/errors.hpp"
#include "starspec/polysym.hpp"

namespace starspec {

struct Vec2 {
  double x = 0.0;
  double p = 0.0;
};

/// Symmetric 2x2 matrix (Hessians, quadratic forms).
struct Mat2 {
  double xx = 0.0;
  double xp = 0.0;
  double pp = 0.0;
  double det() const { return xx * pp - xp * xp; }
  double trace() const { return xx + pp; }
};

/// Whether a symbol's evaluation carries its hbar-dependent terms or only the
/// hbar^0 part.
enum class SymbolTag { principal, full };

namespace detail {

/// Central-difference stencil for the k-th derivative: offsets (k/2 - m),
/// weights (-1)^m C(k,m), error O(h^2).
inline double central_derivative(const std::function<double(double)>& f, double t0, int k,
                                 double h) {
  if (k == 0) return f(t0);
  double num = 0.0;
  double w = 1.0;
  for (int m = 0; m <= k; ++m) {
    num += w * f(t0 + (0.5 * k - m) * h);
    w *= -static_cast<double>(k - m) / (m + 1);
  }
  return num / std::pow(h, k);
}

inline double fd_step(int order, double scale) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  return std::pow(eps, 1.0 / (order + 2)) * std::max(1.0, std::abs(scale));
}

/// Dense double-precision view of a PolySymbol at fixed hbar; Horner in x
/// with inner Horner in p.
class CompiledPoly {
 public:
  CompiledPoly() : nx_(0), np_(0), c_(1, 0.0) {}

  CompiledPoly(const PolySymbol& s, double hbar) {
    nx_ = np_ = 0;
    for (const auto& [m, c] : s.terms()) {
      nx_ = std::max(nx_, m.x);
      np_ = std::max(np_, m.p);
    }
    c_.assign(static_cast<std::size_t>(nx_ + 1) * (np_ + 1), 0.0);
    for (const auto& [m, c] : s.terms())
      at(m.x, m.p) += to_double(c.re) * std::pow(hbar, m.h);
  }

  double eval(double x, double p) const {
    double r = 0.0;
    for (int i = nx_; i >= 0; --i) {
      double row = 0.0;
      for (int j = np_; j >= 0; --j) row = row * p + c_[idx(i, j)];
      r = r * x + row;
    }
    return r;
  }

 private:
  double& at(int i, int j) { return c_[idx(i, j)]; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * (np_ + 1) + j; }
  int nx_, np_;
  std::vector<double> c_;
};

}  // namespace detail

/// Evaluatable phase-space Hamiltonian with optional exact derivative
/// callbacks.  When gradient/Hessian/partials are absent, central finite
/// differences with step h_k = eps^(1/(k+2)) per derivative order are used.
/// Instances are immutable after construction and safe to share across
/// threads; all callbacks must be reentrant.
class SmoothHamiltonian {
 public:
  using ValueFn = std::function<double(double, double)>;
  using GradFn = std::function<Vec2(double, double)>;
  using HessFn = std::function<Mat2(double, double)>;
  using PartialFn = std::function<double(int, int, double, double)>;

  SmoothHamiltonian() = default;

  static SmoothHamiltonian from_callable(ValueFn value, std::string name = "callable") {
    SmoothHamiltonian h;
    h.value_ = std::move(value);
    h.name_ = std::move(name);
    return h;
  }

  static SmoothHamiltonian from_callable(ValueFn value, GradFn grad, HessFn hess,
                                         std::string name = "callable") {
    SmoothHamiltonian h;
    h.value_ = std::move(value);
    h.grad_ = std::move(grad);
    h.hess_ = std::move(hess);
    h.name_ = std::move(name);
    return h;
  }

  /// Kinetic-plus-potential form p^2/2m + V(x).  v_derivs[k] is V^(k);
  /// as many orders as the caller can supply (k >= 1).
  static SmoothHamiltonian from_potential(std::function<double(double)> v,
                                          std::vector<std::function<double(double)>> v_derivs,
                                          double mass, std::string name = "potential") {
    SmoothHamiltonian h;
    h.name_ = std::move(name);
    auto vd = std::make_shared<std::vector<std::function<double(double)>>>(std::move(v_derivs));
    auto vv = std::make_shared<std::function<double(double)>>(std::move(v));
    h.value_ = [vv, mass](double x, double p) { return p * p / (2.0 * mass) + (*vv)(x); };
    if (!vd->empty()) {
      h.grad_ = [vd, mass](double x, double p) { return Vec2{(*vd)[0](x), p / mass}; };
      if (vd->size() >= 2)
        h.hess_ = [vd, mass](double x, double) { return Mat2{(*vd)[1](x), 0.0, 1.0 / mass}; };
      h.partials_ = [vv, vd, mass](int i, int j, double x, double p) -> double {
        if (j == 0) {
          if (i == 0) return p * p / (2.0 * mass) + (*vv)(x);
          if (i <= static_cast<int>(vd->size())) return (*vd)[i - 1](x);
          return std::numeric_limits<double>::quiet_NaN();  // triggers FD fallback
        }
        if (i != 0) return 0.0;
        if (j == 1) return p / mass;
        if (j == 2) return 1.0 / mass;
        return 0.0;
      };
    }
    return h;
  }

  /// Full symbol evaluated at a fixed hbar, with exact symbolic derivatives.
  static SmoothHamiltonian from_symbol(const PolySymbol& sym, double hbar,
                                       std::string name = "symbol") {
    if (!sym.is_real()) throw Error("from_symbol: symbol must be real");
    SmoothHamiltonian h;
    h.name_ = std::move(name);
    h.tag_ = sym.hbar_order() > 0 ? SymbolTag::full : SymbolTag::principal;
    h.hbar_ = hbar;
    h.symbol_ = std::make_shared<PolySymbol>(sym);

    const int deg = std::max(sym.xp_degree(), 0);
    auto tables = std::make_shared<std::vector<detail::CompiledPoly>>();
    auto index = [deg](int i, int j) { return i * (deg + 1) + j; };
    tables->resize(static_cast<std::size_t>(deg + 1) * (deg + 1));
    for (int i = 0; i <= deg; ++i)
      for (int j = 0; j + i <= deg; ++j)
        (*tables)[index(i, j)] = detail::CompiledPoly(sym.derive(i, j), hbar);

    h.value_ = [tables, index](double x, double p) { return (*tables)[index(0, 0)].eval(x, p); };
    h.grad_ = [tables, index](double x, double p) {
      return Vec2{(*tables)[index(1, 0)].eval(x, p), (*tables)[index(0, 1)].eval(x, p)};
    };
    h.hess_ = [tables, index](double x, double p) {
      return Mat2{(*tables)[index(2, 0)].eval(x, p), (*tables)[index(1, 1)].eval(x, p),
                  (*tables)[index(0, 2)].eval(x, p)};
    };
    h.partials_ = [tables, index, deg](int i, int j, double x, double p) -> double {
      if (i + j > deg) return 0.0;
      return (*tables)[index(i, j)].eval(x, p);
    };
    return h;
  }

  double value(double x, double p) const { return value_(x, p); }

  Vec2 gradient(double x, double p) const {
    if (grad_) return grad_(x, p);
    const double hx = detail::fd_step(1, x), hp = detail::fd_step(1, p);
    return Vec2{(value_(x + hx, p) - value_(x - hx, p)) / (2.0 * hx),
                (value_(x, p + hp) - value_(x, p - hp)) / (2.0 * hp)};
  }

  Mat2 hessian(double x, double p) const {
    if (hess_) return hess_(x, p);
    const double hx = detail::fd_step(2, x), hp = detail::fd_step(2, p);
    Mat2 m;
    m.xx = (value_(x + hx, p) - 2.0 * value_(x, p) + value_(x - hx, p)) / (hx * hx);
    m.pp = (value_(x, p + hp) - 2.0 * value_(x, p) + value_(x, p - hp)) / (hp * hp);
    m.xp = (value_(x + hx, p + hp) - value_(x + hx, p - hp) - value_(x - hx, p + hp) +
            value_(x - hx, p - hp)) /
           (4.0 * hx * hp);
    return m;
  }

  /// d^i/dx^i d^j/dp^j H, exact when the callbacks cover the order, nested
  /// central differences otherwise.
  double partial(int i, int j, double x, double p) const {
    if (i < 0 || j < 0) throw Error("partial: negative order");
    if (partials_) {
      double v = partials_(i, j, x, p);
      if (!std::isnan(v)) return v;
    } else {
      if (i == 0 && j == 0) return value_(x, p);
      if (i + j == 1 && grad_) {
        Vec2 g = grad_(x, p);
        return i == 1 ? g.x : g.p;
      }
      if (i + j == 2 && hess_) {
        Mat2 m = hess_(x, p);
        return i == 2 ? m.xx : (j == 2 ? m.pp : m.xp);
      }
    }
    const double hx = detail::fd_step(i, x), hp = detail::fd_step(j, p);
    auto nested = [&](double sx, double sp) {
      auto in_p = [&](double xx) {
        return detail::central_derivative([&](double pp) { return value_(xx, pp); }, p, j, sp);
      };
      return detail::central_derivative(in_p, x, i, sx);
    };
    if (i + j == 0) return value_(x, p);
    // One Richardson level on the O(h^2) stencils.
    return (4.0 * nested(0.5 * hx, 0.5 * hp) - nested(hx, hp)) / 3.0;
  }

  bool has_exact_gradient() const { return static_cast<bool>(grad_); }
  bool has_exact_hessian() const { return static_cast<bool>(hess_); }
  bool has_symbol() const { return static_cast<bool>(symbol_); }
  const PolySymbol& symbol() const {
    if (!symbol_) throw Error("Hamiltonian has no polynomial symbol attached");
    return *symbol_;
  }
  SymbolTag tag() const { return tag_; }
  double hbar_context() const { return hbar_; }
  const std::string& name() const { return name_; }

  SmoothHamiltonian negated() const {
    SmoothHamiltonian h;
    auto v = value_;
    h.value_ = [v](double x, double p) { return -v(x, p); };
    if (grad_) {
      auto g = grad_;
      h.grad_ = [g](double x, double p) {
        Vec2 r = g(x, p);
        return Vec2{-r.x, -r.p};
      };
    }
    if (hess_) {
      auto m = hess_;
      h.hess_ = [m](double x, double p) {
        Mat2 r = m(x, p);
        return Mat2{-r.xx, -r.xp, -r.pp};
      };
    }
    if (partials_) {
      auto q = partials_;
      h.partials_ = [q](int i, int j, double x, double p) { return -q(i, j, x, p); };
    }
    h.tag_ = tag_;
    h.hbar_ = hbar_;
    h.name_ = "-(" + name_ + ")";
    return h;
  }

 private:
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
  PartialFn partials_;
  std::shared_ptr<const PolySymbol> symbol_;
  SymbolTag tag_ = SymbolTag::principal;
  double hbar_ = 0.0;
  std::string name_ = "H";
};

/// Taylor expansion of H about `center` as a PolySymbol in displacement
/// coordinates.  Coefficients come from the derivative callbacks when the
/// Hamiltonian has them and from nested central differences otherwise;
/// doubles are converted to exact rationals.  The constant term is dropped
/// when requested (the usual choice at a fixed point).
inline PolySymbol taylor_from_callable(const SmoothHamiltonian& h, Vec2 center, int degree,
                                       bool drop_constant = false) {
  if (degree < 2) throw DegreeTooLow("taylor_from_callable: degree must be at least 2");
  PolySymbol out;
  for (int i = 0; i <= degree; ++i) {
    for (int j = 0; i + j <= degree; ++j) {
      if (drop_constant && i == 0 && j == 0) continue;
      double d = h.partial(i, j, center.x, center.p);
      Rational c = rational_from_double(d) / (factorial(i) * factorial(j));
      out.add_term({i, j, 0}, RationalComplex(c));
    }
  }
  return out;
}

}  // namespace starspec

#endif  // STARSPEC_SMOOTH_HAMILTONIAN_HPP
