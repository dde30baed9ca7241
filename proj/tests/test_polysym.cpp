#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "starspec/polysym.hpp"
#include "starspec/identities.hpp"
#include "starspec/smooth_hamiltonian.hpp"

using namespace starspec;

namespace {
PolySymbol I() { return PolySymbol::action(); }
}  // namespace

TEST_CASE("derivatives are exact and grading-preserving") {
  // d/dx (x^2 p) = 2 x p
  PolySymbol s = PolySymbol::term(2, 1, 0, Rational(1));
  PolySymbol expect = PolySymbol::term(1, 1, 0, Rational(2));
  REQUIRE(s.derive(Var::x) == expect);

  // d/dp I = p
  REQUIRE(I().derive(Var::p) == PolySymbol::var_p());

  // hbar factors are inert: d/dx (hbar^2 x^3) = 3 hbar^2 x^2
  PolySymbol t = PolySymbol::term(3, 0, 2, Rational(1));
  REQUIRE(t.derive(Var::x) == PolySymbol::term(2, 0, 2, Rational(3)));
  REQUIRE(t.derive(Var::x).hbar_order() == 2);
}

TEST_CASE("mixed partials commute exactly") {
  std::mt19937 rng(42);
  for (int it = 0; it < 50; ++it) {
    PolySymbol s = random_symbol(rng);
    REQUIRE(s.derive(Var::x).derive(Var::p) == s.derive(Var::p).derive(Var::x));
  }
}

TEST_CASE("evaluation") {
  REQUIRE(I().eval(1.0, 1.0, 0.37).real() == 1.0);
  REQUIRE(I().eval(1.0, 1.0, 0.37).imag() == 0.0);

  // I^2 - hbar^2/4 at the origin with hbar = 1
  PolySymbol s = I() * I() - PolySymbol::term(0, 0, 2, Rational(1, 4));
  auto v = s.eval(0.0, 0.0, 1.0);
  REQUIRE(v.real() == -0.25);
  REQUIRE(v.imag() == 0.0);

  // xp + i hbar/2 at (2, 3), hbar = 1
  PolySymbol xp = PolySymbol::term(1, 1, 0, Rational(1));
  xp += PolySymbol::term(0, 0, 1, RationalComplex(Rational(0), Rational(1, 2)));
  auto w = xp.eval(2.0, 3.0, 1.0);
  REQUIRE(w.real() == 6.0);
  REQUIRE(w.imag() == 0.5);
}

TEST_CASE("ring axioms hold exactly on random symbols") {
  std::mt19937 rng(7);
  for (int it = 0; it < 50; ++it) {
    PolySymbol a = random_symbol(rng), b = random_symbol(rng), c = random_symbol(rng);
    REQUIRE(a + b == b + a);
    REQUIRE(a * b == b * a);
    REQUIRE((a + b) + c == a + (b + c));
    REQUIRE((a * b) * c == a * (b * c));
    REQUIRE(a * (b + c) == a * b + a * c);
  }
}

TEST_CASE("hbar grading is additive under products") {
  PolySymbol a = PolySymbol::term(1, 0, 2, Rational(3));
  PolySymbol b = PolySymbol::term(0, 1, 3, Rational(1, 2));
  REQUIRE((a * b).hbar_order() == 5);
}

TEST_CASE("no zero coefficients are ever stored") {
  std::mt19937 rng(11);
  for (int it = 0; it < 50; ++it) {
    PolySymbol a = random_symbol(rng);
    PolySymbol z = a - a;
    REQUIRE(z.is_zero());
    REQUIRE(z.term_count() == 0);
    PolySymbol sq = a * a;
    for (const auto& [m, c] : sq.terms()) REQUIRE(!c.is_zero());
  }
}

TEST_CASE("eval is additive to machine precision at random points") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> pt(-2.0, 2.0);
  for (int it = 0; it < 25; ++it) {
    PolySymbol a = random_symbol(rng), b = random_symbol(rng);
    double x = pt(rng), p = pt(rng);
    auto lhs = (a + b).eval(x, p, 1.0);
    auto rhs = a.eval(x, p, 1.0) + b.eval(x, p, 1.0);
    REQUIRE(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("serialization round-trips and is deterministic") {
  std::mt19937 rng(5);
  for (int it = 0; it < 20; ++it) {
    PolySymbol a = random_symbol(rng);
    PolySymbol back = PolySymbol::parse(a.serialize());
    REQUIRE(back == a);
    REQUIRE(back.serialize() == a.serialize());
  }
  // complex coefficient line
  PolySymbol s = PolySymbol::term(1, 1, 1, RationalComplex(Rational(1, 3), Rational(-2, 7)));
  REQUIRE(PolySymbol::parse(s.serialize()) == s);
  REQUIRE(s.serialize() == "1 1 1 1/3 -2/7\n");
}

TEST_CASE("taylor_from_callable: harmonic quadratic part") {
  auto h = SmoothHamiltonian::from_symbol(PolySymbol::action(), 0.0);
  PolySymbol t = taylor_from_callable(h, {0.0, 0.0}, 2);
  REQUIRE(t == PolySymbol::action());
}

TEST_CASE("taylor_from_callable: polynomial input reproduced exactly") {
  // H = p^2/2 + x^2/2 + x^4 with exact symbolic derivatives
  PolySymbol sym = PolySymbol::action() + PolySymbol::term(4, 0, 0, Rational(1));
  auto h = SmoothHamiltonian::from_symbol(sym, 0.0);
  PolySymbol t = taylor_from_callable(h, {0.0, 0.0}, 4);
  REQUIRE(t == sym);
}

TEST_CASE("taylor_from_callable: Morse-type potential by finite differences") {
  // V(x) = (1 - e^-x)^2 / 2, hand expansion x^2/2 - x^3/2 + ...
  auto value = [](double x, double p) {
    double u = 1.0 - std::exp(-x);
    return 0.5 * p * p + 0.5 * u * u;
  };
  auto h = SmoothHamiltonian::from_callable(value);
  PolySymbol t = taylor_from_callable(h, {0.0, 0.0}, 3);

  PolySymbol hand = PolySymbol::action() + PolySymbol::term(3, 0, 0, Rational(-1, 2));
  for (const auto& [m, c] : hand.terms()) {
    double got = to_double(t.coeff(m).re);
    double want = to_double(c.re);
    INFO("term x^" << m.x << " p^" << m.p);
    REQUIRE(std::abs(got - want) < 1e-7);
  }
  // cross terms and the constant stay below the finite-difference tolerance
  for (const auto& [m, c] : t.terms()) {
    if (hand.coeff(m).is_zero()) REQUIRE(std::abs(to_double(c.re)) < 1e-7);
  }
}

TEST_CASE("taylor_from_callable rejects degree below 2") {
  auto h = SmoothHamiltonian::from_symbol(PolySymbol::action(), 0.0);
  REQUIRE_THROWS_AS(taylor_from_callable(h, {0.0, 0.0}, 1), DegreeTooLow);
}
