#ifndef STARSPEC_IDENTITIES_HPP
#define STARSPEC_IDENTITIES_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "starspec/moyal.hpp"
#include "starspec/polysym.hpp"

namespace starspec {

/// Outcome of one identity family over the whole sample.
struct IdentityReport {
  explicit IdentityReport(std::string n = {}) : name(std::move(n)) {}
  std::string name;
  int checked = 0;
  bool passed = true;
  std::string first_failure;  // serialized offending symbols, empty if passed
};

using BracketFn = std::function<PolySymbol(const PolySymbol&, const PolySymbol&, int)>;

/// Random integer-coefficient symbol of total (x,p)-degree <= max_degree.
/// Driven by mt19937 so the sample is reproducible across platforms.
inline PolySymbol random_symbol(std::mt19937& rng, int max_degree = 4, int max_terms = 6,
                                int coeff_range = 9) {
  std::uniform_int_distribution<int> nterms(2, max_terms);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_int_distribution<int> coeff(-coeff_range, coeff_range);
  PolySymbol s;
  const int n = nterms(rng);
  for (int t = 0; t < n; ++t) {
    int i = deg(rng);
    std::uniform_int_distribution<int> pj(0, max_degree - i);
    int j = pj(rng);
    int c = coeff(rng);
    if (c == 0) c = 1;
    s.add_term({i, j, 0}, RationalComplex(Rational(c)));
  }
  return s;
}

namespace detail {

inline std::string triple_dump(const PolySymbol& a, const PolySymbol& b, const PolySymbol& c) {
  return "A:\n" + a.serialize() + "B:\n" + b.serialize() + "C:\n" + c.serialize();
}

}  // namespace detail

/// Runs the exact identity suites on `count` seeded random symbol triples.
/// Every check is exact rational equality, zero tolerance.  The bracket used
/// by the bracket-based identities can be substituted (test hook for
/// verifying that the harness actually detects failures).
inline std::vector<IdentityReport> run_identity_suite(std::uint64_t seed, int count,
                                                      const BracketFn& bracket = {}) {
  const BracketFn br = bracket ? bracket : [](const PolySymbol& a, const PolySymbol& b, int n) {
    return moyal_bracket(a, b, n);
  };

  IdentityReport assoc{"star-associativity-through-hbar4"};
  IdentityReport antisym{"bracket-antisymmetry-n0..5"};
  IdentityReport jacobi{"poisson-jacobi"};
  IdentityReport jacobi2{"star-jacobi-second-order"};
  IdentityReport leibniz{"poisson-leibniz"};

  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  for (int it = 0; it < count; ++it) {
    PolySymbol a = random_symbol(rng);
    PolySymbol b = random_symbol(rng);
    PolySymbol c = random_symbol(rng);
    const std::string dump = detail::triple_dump(a, b, c);

    if (assoc.passed) {
      PolySymbol lhs = star(star(a, b), c).truncate_hbar(4);
      PolySymbol rhs = star(a, star(b, c)).truncate_hbar(4);
      ++assoc.checked;
      if (!(lhs == rhs)) {
        assoc.passed = false;
        assoc.first_failure = dump;
      }
    }

    if (antisym.passed) {
      bool ok = true;
      for (int n = 0; n <= 5 && ok; ++n) {
        PolySymbol lhs = br(a, b, n);
        PolySymbol rhs = br(b, a, n);
        if (n % 2 != 0) rhs = -rhs;
        ok = (lhs == rhs);
      }
      ++antisym.checked;
      if (!ok) {
        antisym.passed = false;
        antisym.first_failure = dump;
      }
    }

    if (jacobi.passed) {
      PolySymbol s = br(a, br(b, c, 1), 1);
      s += br(b, br(c, a, 1), 1);
      s += br(c, br(a, b, 1), 1);
      ++jacobi.checked;
      if (!s.is_zero()) {
        jacobi.passed = false;
        jacobi.first_failure = dump;
      }
    }

    if (jacobi2.passed) {
      // {A,{B,C}_3} + {A,{B,C}}_3 + cyclic = 0, the hbar^2 layer of the
      // operator Jacobi identity.
      PolySymbol s = br(a, br(b, c, 3), 1) + br(a, br(b, c, 1), 3);
      s += br(b, br(c, a, 3), 1) + br(b, br(c, a, 1), 3);
      s += br(c, br(a, b, 3), 1) + br(c, br(a, b, 1), 3);
      ++jacobi2.checked;
      if (!s.is_zero()) {
        jacobi2.passed = false;
        jacobi2.first_failure = dump;
      }
    }

    if (leibniz.passed) {
      PolySymbol lhs = br(a, b * c, 1);
      PolySymbol rhs = br(a, b, 1) * c + b * br(a, c, 1);
      ++leibniz.checked;
      if (!(lhs == rhs)) {
        leibniz.passed = false;
        leibniz.first_failure = dump;
      }
    }
  }

  // Function-of-operator consistency: fixed cases, independent of the sample.
  IdentityReport fos{"function-symbol-consistency"};
  {
    const PolySymbol cases[] = {PolySymbol::action(), PolySymbol::action() + PolySymbol::var_x()};
    for (const PolySymbol& a : cases) {
      for (int k = 2; k <= 3; ++k) {
        std::vector<Rational> f(k + 1, Rational(0));
        f[k] = 1;
        PolySymbol lhs = symbol_of_function(a, f, 2);
        PolySymbol rhs = a;
        for (int m = 1; m < k; ++m) rhs = star(rhs, a);
        rhs = rhs.truncate_hbar(2);
        ++fos.checked;
        if (!(lhs == rhs) && fos.passed) {
          fos.passed = false;
          fos.first_failure = "A:\n" + a.serialize() + "k: " + std::to_string(k);
        }
      }
    }
  }

  return {assoc, antisym, jacobi, jacobi2, leibniz, fos};
}

}  // namespace starspec

#endif  // STARSPEC_IDENTITIES_HPP
