#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <future>
#include <random>

#include "starspec/catalog.hpp"
#include "starspec/spectrum.hpp"

using namespace starspec;

namespace {

PolySymbol I() { return PolySymbol::action(); }

SmoothHamiltonian harmonic() { return SmoothHamiltonian::from_symbol(I(), 1.0, "harmonic"); }

SmoothHamiltonian isq() { return SmoothHamiltonian::from_symbol(I() * I(), 1.0, "I^2"); }

PolySymbol icube_sym() { return star(star(I(), I()), I()); }

SmoothHamiltonian perturbed_quartic() {
  PolySymbol s = I() + PolySymbol::term(4, 0, 0, Rational(1, 10));
  return SmoothHamiltonian::from_symbol(s, 1.0, "perturbed_quartic");
}

FixedPointReport fp_of(const SmoothHamiltonian& h) { return find_fixed_point(h, {0.1, 0.05}); }

}  // namespace

TEST_CASE("correction profile: harmonic is the constant 2") {
  auto h = harmonic();
  auto fp = fp_of(h);
  for (double a : {0.25, 0.5, 2.0})
    REQUIRE(correction_profile(h, fp, a) == Catch::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("correction profile: H = I^2 gives c(A) = 12A") {
  auto h = isq();
  auto fp = fp_of(h);
  for (double a : {0.5, 1.0, 2.5})
    REQUIRE(correction_profile(h, fp, a) == Catch::Approx(12.0 * a).epsilon(1e-9));
}

TEST_CASE("correction profile: kinetic-plus-potential reduces to 2<V''>/m omega") {
  auto h = perturbed_quartic();
  auto fp = fp_of(h);
  const double a = 1.3;
  double c = correction_profile(h, fp, a);
  // independent route: energy-parameterized orbit, direct average of V''
  double e = energy_of_action(h, fp, a);
  Orbit orb = trace_orbit(h, e, fp);
  double vpp = orbit_average(orb, [](double x, double) { return 1.0 + 1.2 * x * x; });
  REQUIRE(c == Catch::Approx(2.0 * vpp / orb.frequency()).epsilon(1e-8));
}

TEST_CASE("bs_eigenvalue: harmonic levels are exact with negligible correction") {
  auto h = harmonic();
  auto fp = fp_of(h);
  for (int n = 0; n < 6; ++n) {
    double e2 = bs_eigenvalue(h, fp, n, 1.0, 2);
    double e0 = bs_eigenvalue(h, fp, n, 1.0, 0);
    REQUIRE(e2 == Catch::Approx(n + 0.5).margin(1e-10));
    REQUIRE(std::abs(e2 - e0) < 1e-10);
  }
}

TEST_CASE("bs_eigenvalue: symbol I^2 matches the Weyl operator exactly") {
  auto h = isq();
  auto fp = fp_of(h);
  REQUIRE(bs_eigenvalue(h, fp, 0, 1.0, 2) == Catch::Approx(0.5).margin(1e-10));
  for (int n = 0; n < 6; ++n) {
    double want = (n + 0.5) * (n + 0.5) + 0.25;
    REQUIRE(bs_eigenvalue(h, fp, n, 1.0, 2) ==
            Catch::Approx(want).margin(1e-9));
  }
}

TEST_CASE("bs_eigenvalue: star cube of I reproduces (n+1/2)^3 through cancellation") {
  auto h = SmoothHamiltonian::from_symbol(icube_sym(), 1.0, "I*I*I");
  auto fp = fp_of(h);
  REQUIRE(fp.classification == FixedPointClass::GenericMaximum);
  REQUIRE(bs_eigenvalue(h, fp, 1, 1.0, 2) == Catch::Approx(3.375).margin(2e-9));
  for (int n = 0; n < 6; ++n) {
    double want = std::pow(n + 0.5, 3);
    REQUIRE(bs_eigenvalue(h, fp, n, 1.0, 2) ==
            Catch::Approx(want).margin(1e-9));
  }
}

TEST_CASE("bs_spectrum: ten harmonic levels and the skip contract") {
  auto h = harmonic();
  auto fp = fp_of(h);
  SpectrumResult r = bs_spectrum(h, fp, 0, 9, 1.0, 2);
  REQUIRE(r.levels.size() == 10);
  for (int n = 0; n < 10; ++n) {
    REQUIRE(!r.levels[n].skipped);
    REQUIRE(r.levels[n].e2 == Catch::Approx(n + 0.5).margin(1e-9));
  }

  Window w;
  w.action_ceiling = 5.0;  // below A_9 = 9.5
  SpectrumResult partial = bs_spectrum(h, fp, 0, 9, 1.0, 2, w);
  int skipped = 0;
  for (const auto& lev : partial.levels) {
    if (lev.action > 5.0) {
      REQUIRE(lev.skipped);
      ++skipped;
    } else {
      REQUIRE(!lev.skipped);
    }
  }
  REQUIRE(skipped == 5);
}

TEST_CASE("bs_spectrum: generic maximum goes through the negated engine") {
  auto hpos = perturbed_quartic();
  auto hneg = hpos.negated();
  auto fpp = fp_of(hpos);
  auto fpn = find_fixed_point(hneg, {0.1, 0.05});
  REQUIRE(fpn.classification == FixedPointClass::GenericMaximum);

  SpectrumResult up = bs_spectrum(hpos, fpp, 0, 4, 0.5, 2);
  SpectrumResult down = bs_spectrum(hneg, fpn, 0, 4, 0.5, 2);
  REQUIRE(down.negated);
  for (int n = 0; n < 5; ++n)
    REQUIRE(down.levels[n].e2 == Catch::Approx(-up.levels[n].e2).margin(1e-9));
}

TEST_CASE("bs_spectrum rejects non-generic wells and saddles") {
  PolySymbol quartic = PolySymbol::term(0, 2, 0, Rational(1, 2)) +
                       PolySymbol::term(4, 0, 0, Rational(1));
  auto h = SmoothHamiltonian::from_symbol(quartic, 1.0, "pure_quartic");
  auto fp = find_fixed_point(h, {0.1, 0.0});
  REQUIRE(fp.classification == FixedPointClass::NonGeneric);
  REQUIRE_THROWS_AS(bs_spectrum(h, fp, 0, 3, 1.0, 2), NonGeneric);

  PolySymbol xp = PolySymbol::term(1, 1, 0, Rational(1));
  auto hs = SmoothHamiltonian::from_symbol(xp, 1.0, "xp");
  auto fps = find_fixed_point(hs, {0.1, 0.1});
  REQUIRE_THROWS_AS(bs_spectrum(hs, fps, 0, 1, 1.0, 2), NonGeneric);
}

TEST_CASE("linear symplectic invariance of E2") {
  PolySymbol base = I() + PolySymbol::term(4, 0, 0, Rational(1, 10));
  auto h0 = SmoothHamiltonian::from_symbol(base, 0.25, "pq");
  auto fp0 = find_fixed_point(h0, {0.0, 0.0});
  SpectrumResult ref = bs_spectrum(h0, fp0, 0, 4, 0.25, 2);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> th(0.0, 2.0 * M_PI), sc(0.85, 1.2), sh(-0.3, 0.3);
  const double angle = th(rng);
  double c = std::cos(angle), s = std::sin(angle), k = sc(rng), a = sh(rng);
  // rotation * diag(k, 1/k) * shear, det = 1
  LinearSymplectic rot{c, -s, s, c};
  LinearSymplectic mix{rot.xx * k, rot.xp / k + rot.xx * k * a, rot.px * k,
                       rot.pp / k + rot.px * k * a};
  REQUIRE(std::abs(mix.det() - 1.0) < 1e-12);

  PolySymbol mapped = apply_linear_symplectic(base, mix);
  auto h1 = SmoothHamiltonian::from_symbol(mapped, 0.25, "pq∘S");
  auto fp1 = find_fixed_point(h1, {0.0, 0.0});
  SpectrumResult got = bs_spectrum(h1, fp1, 0, 4, 0.25, 2);
  for (int n = 0; n < 5; ++n)
    REQUIRE(got.levels[n].e2 == Catch::Approx(ref.levels[n].e2).margin(1e-8));
}

TEST_CASE("Morse well: quadratic action-energy law makes the correction vanish") {
  // f0(A) = w A - (alpha^2/2) A^2 exactly, so E0 is already the exact
  // spectrum and the hbar^2 term must be numerically zero.
  const double d = 8.0, alpha = 0.5, hbar = 0.25;
  CatalogEntry entry = make_morse(d, alpha, hbar);
  auto fp = find_fixed_point(entry.h, entry.guess);
  REQUIRE(fp.classification == FixedPointClass::GenericMinimum);
  const double w = alpha * std::sqrt(2.0 * d);
  SpectrumResult r = bs_spectrum(entry.h, fp, 0, 4, hbar, 2);
  for (int n = 0; n < 5; ++n) {
    double en = hbar * w * (n + 0.5) - std::pow(hbar * w * (n + 0.5), 2) / (4.0 * d);
    REQUIRE(!r.levels[n].skipped);
    REQUIRE(r.levels[n].e2 == Catch::Approx(en).margin(1e-8));
    REQUIRE(std::abs(r.levels[n].correction) < 1e-8);
  }
}

TEST_CASE("perturbed quartic at hbar 0.1: E2 beats E0 on every level") {
  auto quartic_v = [](double x) { return 0.5 * x * x + 0.1 * std::pow(x, 4); };
  CatalogEntry entry = make_builtin("perturbed_quartic", {}, 0.1);
  auto fp = find_fixed_point(entry.h, entry.guess);
  SpectrumResult r = bs_spectrum(entry.h, fp, 0, 10, 0.1, 2);
  OracleSpectrum grid = grid_spectrum(quartic_v, 1.0, 0.1, -4.0, 4.0, 128, 11, 1e-10);
  for (int n = 0; n <= 10; ++n) {
    double oracle = grid.eigenvalues[n];
    REQUIRE(std::abs(r.levels[n].e2 - oracle) < std::abs(r.levels[n].e0 - oracle));
  }
}

TEST_CASE("per-level computations are safe to run concurrently") {
  auto h = perturbed_quartic();
  auto fp = fp_of(h);
  double serial0 = bs_eigenvalue(h, fp, 0, 1.0, 2);
  double serial3 = bs_eigenvalue(h, fp, 3, 1.0, 2);
  auto f0 = std::async(std::launch::async, [&] { return bs_eigenvalue(h, fp, 0, 1.0, 2); });
  auto f3 = std::async(std::launch::async, [&] { return bs_eigenvalue(h, fp, 3, 1.0, 2); });
  REQUIRE(f0.get() == serial0);
  REQUIRE(f3.get() == serial3);
}

TEST_CASE("spectrum serialization is deterministic and carries error columns") {
  auto h = harmonic();
  auto fp = fp_of(h);
  SpectrumResult r = bs_spectrum(h, fp, 0, 3, 1.0, 2);
  std::string csv1 = spectrum_to_csv(r);
  std::string csv2 = spectrum_to_csv(bs_spectrum(h, fp, 0, 3, 1.0, 2));
  REQUIRE(csv1 == csv2);
  REQUIRE(csv1.substr(0, 23) == "n,A,E0,E2,corr,err_est\n");

  auto j = spectrum_to_json(r);
  REQUIRE(j["levels"].size() == 4);
  REQUIRE(j["levels"][0].contains("diff_error"));
  REQUIRE(j["levels"][0].contains("orbit_drift"));
}

TEST_CASE("oracle serialization mirrors the spectrum schema") {
  auto spec = fock_spectrum(I(), 1.0, 32, 3, 1e-12);
  std::string csv = oracle_to_csv(spec);
  REQUIRE(csv.substr(0, 13) == "n,E,conv_est\n");
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  REQUIRE(line.substr(0, 2) == "0,");
  REQUIRE(std::stod(line.substr(2)) == Catch::Approx(0.5).margin(1e-12));
  auto j = oracle_to_json(spec);
  REQUIRE(j["method"] == "fock");
  REQUIRE(j["eigenvalues"].size() == 3);
  REQUIRE(j["convergence"].size() == 3);
}
