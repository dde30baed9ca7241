#ifndef STARSPEC_CATALOG_HPP
#define STARSPEC_CATALOG_HPP

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "starspec/errors.hpp"
#include "starspec/moyal.hpp"
#include "starspec/polysym.hpp"
#include "starspec/smooth_hamiltonian.hpp"

namespace starspec {

/// One resolvable Hamiltonian: the evaluatable form plus whatever extra
/// structure it has (polynomial symbol for the Fock oracle, potential form
/// for the grid oracle).
struct CatalogEntry {
  std::string name;
  SmoothHamiltonian h;
  bool has_symbol = false;
  PolySymbol symbol;
  bool has_potential = false;
  std::function<double(double)> potential;
  double mass = 1.0;
  Vec2 guess{0.1, 0.0};  // fixed-point search start
};

namespace detail {

inline PolySymbol potential_poly(const std::vector<Rational>& v_coeffs, const Rational& mass) {
  PolySymbol s = PolySymbol::term(0, 2, 0, Rational(1) / (2 * mass));
  for (std::size_t k = 0; k < v_coeffs.size(); ++k)
    s.add_term({static_cast<int>(k), 0, 0}, RationalComplex(v_coeffs[k]));
  return s;
}

}  // namespace detail

/// Kinetic-plus-potential entry from exact polynomial potential coefficients.
inline CatalogEntry make_polynomial_potential(const std::string& name,
                                              const std::vector<Rational>& v_coeffs, Rational mass,
                                              double hbar) {
  CatalogEntry e;
  e.name = name;
  e.symbol = detail::potential_poly(v_coeffs, mass);
  e.has_symbol = true;
  e.h = SmoothHamiltonian::from_symbol(e.symbol, hbar, name);
  e.mass = to_double(mass);
  std::vector<double> vc;
  for (const auto& c : v_coeffs) vc.push_back(to_double(c));
  e.potential = [vc](double x) {
    double r = 0.0;
    for (std::size_t k = vc.size(); k-- > 0;) r = r * x + vc[k];
    return r;
  };
  e.has_potential = true;
  return e;
}

/// Entry from an arbitrary polynomial symbol.
inline CatalogEntry make_symbol_entry(const std::string& name, const PolySymbol& sym,
                                      double hbar) {
  CatalogEntry e;
  e.name = name;
  e.symbol = sym;
  e.has_symbol = true;
  e.h = SmoothHamiltonian::from_symbol(sym, hbar, name);
  return e;
}

/// Morse well D (1 - exp(-a x))^2 with analytic derivatives through fourth
/// order; potential form only (not polynomial).
inline CatalogEntry make_morse(double d, double a, double hbar) {
  (void)hbar;
  CatalogEntry e;
  e.name = "morse";
  e.mass = 1.0;
  e.potential = [d, a](double x) {
    double u = 1.0 - std::exp(-a * x);
    return d * u * u;
  };
  e.has_potential = true;
  auto v1 = [d, a](double x) {
    double u = std::exp(-a * x);
    return 2.0 * d * a * (u - u * u);
  };
  auto v2 = [d, a](double x) {
    double u = std::exp(-a * x);
    return 2.0 * d * a * a * (2.0 * u * u - u);
  };
  auto v3 = [d, a](double x) {
    double u = std::exp(-a * x);
    return 2.0 * d * a * a * a * (u - 4.0 * u * u);
  };
  auto v4 = [d, a](double x) {
    double u = std::exp(-a * x);
    return 2.0 * d * a * a * a * a * (8.0 * u * u - u);
  };
  e.h = SmoothHamiltonian::from_potential(e.potential, {v1, v2, v3, v4}, 1.0, "morse");
  e.guess = {0.1, 0.0};
  return e;
}

/// Builtin catalog.  Parameters (with defaults): harmonic(mass=1, omega=1),
/// shifted_harmonic(x0=1), perturbed_quartic(epsilon=0.1),
/// pure_quartic(), morse(D=8, alpha=0.5), I2(), I3().
/// I2 is the plain squared action; I3 is the star cube of the action, whose
/// hbar^2 tail makes its Weyl operator the exact cube.
inline CatalogEntry make_builtin(const std::string& name,
                                 const std::map<std::string, double>& params, double hbar) {
  auto get = [&params](const std::string& key, double dflt) {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
  };
  const PolySymbol I = PolySymbol::action();

  if (name == "harmonic") {
    Rational m = rational_from_decimal(get("mass", 1.0));
    Rational w = rational_from_decimal(get("omega", 1.0));
    CatalogEntry e = make_polynomial_potential(
        "harmonic", {Rational(0), Rational(0), m * w * w / 2}, m, hbar);
    return e;
  }
  if (name == "shifted_harmonic") {
    Rational x0 = rational_from_decimal(get("x0", 1.0));
    CatalogEntry e = make_polynomial_potential(
        "shifted_harmonic", {x0 * x0 / 2, -x0, Rational(1, 2)}, Rational(1), hbar);
    e.guess = {to_double(x0) + 0.1, 0.0};
    return e;
  }
  if (name == "perturbed_quartic") {
    Rational eps = rational_from_decimal(get("epsilon", 0.1));
    return make_polynomial_potential(
        "perturbed_quartic", {Rational(0), Rational(0), Rational(1, 2), Rational(0), eps},
        Rational(1), hbar);
  }
  if (name == "pure_quartic") {
    return make_polynomial_potential(
        "pure_quartic", {Rational(0), Rational(0), Rational(0), Rational(0), Rational(1)},
        Rational(1), hbar);
  }
  if (name == "morse") return make_morse(get("D", 8.0), get("alpha", 0.5), hbar);
  if (name == "I2") return make_symbol_entry("I2", I * I, hbar);
  if (name == "I3") return make_symbol_entry("I3", star(star(I, I), I), hbar);
  throw ConfigError("unknown builtin hamiltonian '" + name + "'");
}

}  // namespace starspec

#endif  // STARSPEC_CATALOG_HPP
