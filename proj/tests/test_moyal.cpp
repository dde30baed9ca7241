#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "starspec/identities.hpp"
#include "starspec/moyal.hpp"

using namespace starspec;

namespace {
PolySymbol I() { return PolySymbol::action(); }
PolySymbol X() { return PolySymbol::var_x(); }
PolySymbol P() { return PolySymbol::var_p(); }
PolySymbol C(long n, long d = 1) { return PolySymbol::constant(Rational(n, d)); }
}  // namespace

TEST_CASE("moyal brackets: pinned values") {
  REQUIRE(moyal_bracket(I(), I(), 2) == C(2));
  REQUIRE(moyal_bracket(X(), P(), 1) == C(1));
  // {I^2, I}_2 = 8 I  (hand contraction of Hessians)
  REQUIRE(moyal_bracket(I() * I(), I(), 2) == C(8) * I());
  // {x^3, p^3}_3 = 6 * 6 = 36 (single third-derivative contraction)
  REQUIRE(moyal_bracket(X().pow(3), P().pow(3), 3) == C(36));
}

TEST_CASE("bracket order zero is the pointwise product") {
  std::mt19937 rng(17);
  for (int it = 0; it < 20; ++it) {
    PolySymbol a = random_symbol(rng), b = random_symbol(rng);
    REQUIRE(moyal_bracket(a, b, 0) == a * b);
  }
}

TEST_CASE("star product: pinned values") {
  // I * I = I^2 - hbar^2/4
  PolySymbol expect = I() * I() - PolySymbol::term(0, 0, 2, Rational(1, 4));
  REQUIRE(star(I(), I()) == expect);

  // x * p = xp + i hbar / 2 (fixes the operator-ordering sign)
  PolySymbol xp = PolySymbol::term(1, 1, 0, Rational(1));
  xp += PolySymbol::term(0, 0, 1, RationalComplex(Rational(0), Rational(1, 2)));
  REQUIRE(star(X(), P()) == xp);

  // 1 * B = B
  std::mt19937 rng(23);
  for (int it = 0; it < 10; ++it) {
    PolySymbol b = random_symbol(rng);
    REQUIRE(star(C(1), b) == b);
    REQUIRE(star(b, C(1)) == b);
  }
}

TEST_CASE("star cube of the action") {
  PolySymbol cube = star(star(I(), I()), I());
  PolySymbol expect = I().pow(3) - PolySymbol::term(0, 0, 2, Rational(5, 4)) * I();
  REQUIRE(cube == expect);
  REQUIRE(star(I(), star(I(), I())) == expect);
}

TEST_CASE("truncated star reports natural termination") {
  auto t = star(I(), I(), 4);
  REQUIRE(t.exact);
  auto t2 = star(I(), I(), 1);  // discards the hbar^2 term
  REQUIRE(!t2.exact);
  REQUIRE(t2.value == I() * I());
}

TEST_CASE("star commutator: pinned values") {
  // [x, p]_* = i hbar
  PolySymbol ih = PolySymbol::term(0, 0, 1, RationalComplex(Rational(0), Rational(1)));
  REQUIRE(star_commutator(X(), P()) == ih);

  // functions of I commute
  REQUIRE(star_commutator(I(), I() * I()).is_zero());

  // [x^2, p^2]_* = 4 i hbar x p
  PolySymbol expect =
      PolySymbol::term(1, 1, 1, RationalComplex(Rational(0), Rational(4)));
  REQUIRE(star_commutator(X() * X(), P() * P()) == expect);
}

TEST_CASE("star commutator equals star difference on random symbols") {
  std::mt19937 rng(29);
  for (int it = 0; it < 30; ++it) {
    PolySymbol a = random_symbol(rng), b = random_symbol(rng);
    REQUIRE(star_commutator(a, b) == star(a, b) - star(b, a));
  }
}

TEST_CASE("hessian bracket: pinned values") {
  REQUIRE(hessian_bracket(I()) == C(2));
  // H = I^2: chain rule 2(2I f'f'' + f'^2) with f = t^2 gives 24 I^2
  REQUIRE(hessian_bracket(I() * I()) == C(24) * I() * I());
  REQUIRE(hessian_bracket(I() * I()) == moyal_bracket(I() * I(), I() * I(), 2));
}

TEST_CASE("hessian bracket of kinetic-plus-potential is 2 V''(x)/m") {
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> deg(2, 6), coeff(-9, 9), mnum(1, 9), mden(1, 9);
  for (int it = 0; it < 20; ++it) {
    Rational m(mnum(rng), mden(rng));
    PolySymbol v;
    int d = deg(rng);
    for (int k = 0; k <= d; ++k) v.add_term({k, 0, 0}, RationalComplex(Rational(coeff(rng))));
    PolySymbol h = PolySymbol::term(0, 2, 0, Rational(1) / (2 * m)) + v;
    PolySymbol expect = RationalComplex(Rational(2) / m) * v.derive(2, 0);
    REQUIRE(hessian_bracket(h) == expect);
  }
}

TEST_CASE("chain diagram on the action") {
  // (I -> I <- I) = 2I
  REQUIRE(chain_diagram(I()) == C(2) * I());
}

TEST_CASE("symbol_of_function: pinned values") {
  std::vector<Rational> t2 = {0, 0, 1};
  std::vector<Rational> t3 = {0, 0, 0, 1};
  std::vector<Rational> id = {0, 1};

  REQUIRE(symbol_of_function(I(), t2, 2) == star(I(), I()));
  REQUIRE(symbol_of_function(I(), t3, 2) == star(star(I(), I()), I()));

  std::mt19937 rng(37);
  for (int it = 0; it < 10; ++it) {
    PolySymbol a = random_symbol(rng);
    REQUIRE(symbol_of_function(a, id, 2) == a);
    REQUIRE(symbol_of_function(a, id, 0) == a);
  }
  REQUIRE_THROWS_AS(symbol_of_function(I(), t2, 4), Error);
}

TEST_CASE("symbol_of_function matches star powers for shifted action") {
  PolySymbol a = I() + X();
  std::vector<Rational> t2 = {0, 0, 1};
  std::vector<Rational> t3 = {0, 0, 0, 1};
  REQUIRE(symbol_of_function(a, t2, 2) == star(a, a).truncate_hbar(2));
  REQUIRE(symbol_of_function(a, t3, 2) == star(star(a, a), a).truncate_hbar(2));
}

TEST_CASE("eval of star output: x*p at (2,3) with hbar 1") {
  auto v = star(X(), P()).eval(2.0, 3.0, 1.0);
  REQUIRE(v.real() == 6.0);
  REQUIRE(v.imag() == 0.5);
}

TEST_CASE("full star associativity on random symbols") {
  std::mt19937 rng(41);
  for (int it = 0; it < 30; ++it) {
    PolySymbol a = random_symbol(rng, 3), b = random_symbol(rng, 3), c = random_symbol(rng, 3);
    REQUIRE(star(star(a, b), c) == star(a, star(b, c)));
  }
}

TEST_CASE("identity suite passes on 100 seeded symbols") {
  auto reports = run_identity_suite(20260809, 100);
  for (const auto& r : reports) {
    INFO(r.name << " checked=" << r.checked << "\n" << r.first_failure);
    REQUIRE(r.passed);
  }
}

TEST_CASE("identity suite flags a corrupted bracket") {
  BracketFn corrupt = [](const PolySymbol& a, const PolySymbol& b, int n) {
    PolySymbol r = moyal_bracket(a, b, n);
    if (n == 1) r += PolySymbol::constant(Rational(1));
    return r;
  };
  auto reports = run_identity_suite(1, 5, corrupt);
  bool any_failed = false;
  for (const auto& r : reports) {
    if (!r.passed) {
      any_failed = true;
      REQUIRE(!r.first_failure.empty());
    }
  }
  REQUIRE(any_failed);
}
