#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "starspec/oracle.hpp"

using namespace starspec;

namespace {
PolySymbol I() { return PolySymbol::action(); }
double harmonic_v(double x) { return 0.5 * x * x; }
double quartic_v(double x) { return 0.5 * x * x + 0.1 * x * x * x * x; }
}  // namespace

TEST_CASE("symmetric eigensolver: residual and trace on random matrices") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 24;
    std::vector<double> m(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m[i * n + j] = m[j * n + i] = u(rng);
    auto eig = detail::eigh(m, n);
    REQUIRE(detail::eig_residual(m, n, eig, n) < 1e-10 * detail::mat_norm_inf(m, n));
    double tr = 0.0, sum = 0.0;
    for (int i = 0; i < n; ++i) {
      tr += m[i * n + i];
      sum += eig.values[i];
    }
    REQUIRE(sum == Catch::Approx(tr).margin(1e-10));
    for (int i = 0; i + 1 < n; ++i) REQUIRE(eig.values[i] <= eig.values[i + 1]);
  }
}

TEST_CASE("grid oracle: harmonic levels") {
  auto spec = grid_spectrum(harmonic_v, 1.0, 1.0, -8.0, 8.0, 64, 6, 1e-10);
  for (int n = 0; n < 6; ++n) REQUIRE(spec.eigenvalues[n] == Catch::Approx(n + 0.5).margin(1e-8));
  for (double c : spec.convergence) REQUIRE(c < 1e-10);
}

TEST_CASE("grid oracle: positive perturbation raises the ground state") {
  auto spec = grid_spectrum(quartic_v, 1.0, 1.0, -8.0, 8.0, 64, 1, 1e-10);
  REQUIRE(spec.eigenvalues[0] > 0.5);
}

TEST_CASE("grid oracle: domain auto-extension confines leaking states") {
  // deliberately tight initial box; the oracle must widen it
  auto spec = grid_spectrum(harmonic_v, 1.0, 1.0, -2.0, 2.0, 64, 4, 1e-9);
  for (int n = 0; n < 4; ++n) REQUIRE(spec.eigenvalues[n] == Catch::Approx(n + 0.5).margin(1e-8));
  REQUIRE(spec.domain_hi - spec.domain_lo > 4.0);
}

TEST_CASE("grid oracle: truncation monotonicity") {
  // coarse grids so the estimates sit above the roundoff floor
  auto l1 = grid_levels(quartic_v, 1.0, 1.0, -8.0, 8.0, 8, 3);
  auto l2 = grid_levels(quartic_v, 1.0, 1.0, -8.0, 8.0, 16, 3);
  auto l3 = grid_levels(quartic_v, 1.0, 1.0, -8.0, 8.0, 32, 3);
  auto l4 = grid_levels(quartic_v, 1.0, 1.0, -8.0, 8.0, 64, 3);
  for (int n = 0; n < 3; ++n) {
    double d1 = std::abs(l2[n] - l1[n]);
    double d2 = std::abs(l3[n] - l2[n]);
    double d3 = std::abs(l4[n] - l3[n]);
    REQUIRE(d2 < d1);
    REQUIRE(d3 < d2);
  }
}

TEST_CASE("grid oracle input validation and divergence") {
  REQUIRE_THROWS_AS(grid_levels(harmonic_v, 1.0, 1.0, -8.0, 8.0, 100, 4), Error);
  REQUIRE_THROWS_AS(grid_spectrum(harmonic_v, 1.0, 1.0, -8.0, 8.0, 64, 4, 1e-18), OracleDiverged);
}

TEST_CASE("fock oracle: action levels are (n + 1/2) hbar") {
  for (double hbar : {1.0, 0.25}) {
    auto spec = fock_spectrum(I(), hbar, 32, 6, 1e-12);
    for (int n = 0; n < 6; ++n)
      REQUIRE(spec.eigenvalues[n] == Catch::Approx((n + 0.5) * hbar).margin(1e-12));
  }
}

TEST_CASE("fock oracle: symbol I^2 gives (n+1/2)^2 + 1/4") {
  auto spec = fock_spectrum(I() * I(), 1.0, 32, 6, 1e-10);
  for (int n = 0; n < 6; ++n) {
    double want = (n + 0.5) * (n + 0.5) + 0.25;
    REQUIRE(spec.eigenvalues[n] == Catch::Approx(want).margin(1e-9));
  }
}

TEST_CASE("fock oracle: star cube of I gives (n+1/2)^3") {
  PolySymbol sym = I().pow(3) - PolySymbol::term(0, 0, 2, Rational(5, 4)) * I();
  auto spec = fock_spectrum(sym, 1.0, 32, 6, 1e-10);
  for (int n = 0; n < 6; ++n) {
    double want = std::pow(n + 0.5, 3);
    REQUIRE(spec.eigenvalues[n] == Catch::Approx(want).margin(1e-8));
  }
}

TEST_CASE("fock oracle: Hermitian embedding handles xp cross terms") {
  // quadratic I + eps*xp is metaplectically exact: levels (n+1/2) sqrt(1-eps^2)
  const double eps = 0.3;
  PolySymbol sym = I() + PolySymbol::term(1, 1, 0, rational_from_double(eps));
  auto spec = fock_spectrum(sym, 1.0, 64, 5, 1e-10);
  const double w = std::sqrt(1.0 - eps * eps);
  for (int n = 0; n < 5; ++n)
    REQUIRE(spec.eigenvalues[n] == Catch::Approx((n + 0.5) * w).margin(1e-8));
}

TEST_CASE("fock oracle rejects unbounded symbols") {
  REQUIRE_THROWS_AS(fock_spectrum(PolySymbol::term(3, 0, 0, Rational(1)), 1.0, 32, 2),
                    UnboundedSymbol);
  // x^2 alone has a sign-degenerate leading form (continuous spectrum)
  REQUIRE_THROWS_AS(fock_spectrum(PolySymbol::term(2, 0, 0, Rational(1)), 1.0, 32, 2),
                    UnboundedSymbol);
}

TEST_CASE("cross-oracle agreement on the perturbed quartic") {
  PolySymbol sym = I() + PolySymbol::term(4, 0, 0, Rational(1, 10));
  auto grid = grid_spectrum(quartic_v, 1.0, 1.0, -8.0, 8.0, 128, 8, 1e-10);
  auto fock = fock_spectrum(sym, 1.0, 64, 8, 1e-10);
  for (int n = 0; n < 8; ++n)
    REQUIRE(grid.eigenvalues[n] == Catch::Approx(fock.eigenvalues[n]).margin(1e-8));
}
