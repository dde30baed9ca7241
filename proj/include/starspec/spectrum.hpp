#ifndef STARSPEC_SPECTRUM_HPP
#define STARSPEC_SPECTRUM_HPP

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "starspec/dynamics.hpp"
#include "starspec/errors.hpp"
#include "starspec/io.hpp"
#include "starspec/moyal.hpp"
#include "starspec/oracle.hpp"
#include "starspec/polysym.hpp"

namespace starspec {

struct LevelResult {
  int n = 0;
  double action = 0.0;      // A_n = (n + 1/2) hbar
  double e0 = 0.0;          // leading Bohr-Sommerfeld energy
  double e2 = 0.0;          // with the hbar^2 correction
  double correction = 0.0;  // e2 - e0
  double diff_step = 0.0;   // d/dA differencing step used
  double diff_error = 0.0;  // its truncation/noise estimate (energy units)
  double orbit_drift = 0.0; // worst relative energy drift along traced orbits
  bool skipped = false;
  std::string skip_reason;
};

struct SpectrumResult {
  std::string hamiltonian;
  double hbar = 1.0;
  int order = 2;
  bool negated = false;  // maximum handled through the sign-flipped engine
  Window window;
  std::vector<LevelResult> levels;  // sorted by n
};

namespace detail {

struct WorkingBranch {
  SmoothHamiltonian h;
  FixedPointReport fp;
  int sign = +1;  // +1 direct, -1 negated (generic maximum)
};

/// Is the symbol rotation-invariant about the fixed point ({H, I_fp} = 0)?
/// Such Hamiltonians are functions of the local oscillator action and the
/// quantization rule applies even when the Hessian degenerates there.
inline bool rotation_invariant_about(const PolySymbol& sym, Vec2 fp_location) {
  PolySymbol i_fp;  // ((x - x0)^2 + (p - p0)^2)/2
  const Rational x0 = rational_from_double(fp_location.x);
  const Rational p0 = rational_from_double(fp_location.p);
  i_fp.add_term({2, 0, 0}, RationalComplex(Rational(1, 2)));
  i_fp.add_term({0, 2, 0}, RationalComplex(Rational(1, 2)));
  i_fp.add_term({1, 0, 0}, RationalComplex(-x0));
  i_fp.add_term({0, 1, 0}, RationalComplex(-p0));
  i_fp.add_term({0, 0, 0}, RationalComplex((x0 * x0 + p0 * p0) / 2));
  return poisson_bracket(sym, i_fp).is_zero();
}

/// Resolves how the engine runs: minima directly, maxima through the negated
/// Hamiltonian with eigenvalues flipped back, degenerate-but-rotation-
/// invariant symbols directly (their orbits are exact circles).  Everything
/// else is rejected with the quartic-well caveat.
inline WorkingBranch resolve_branch(const SmoothHamiltonian& h, const FixedPointReport& fp) {
  switch (fp.classification) {
    case FixedPointClass::GenericMinimum:
      return {h, fp, +1};
    case FixedPointClass::GenericMaximum: {
      SmoothHamiltonian neg = h.negated();
      FixedPointReport nfp = fp;
      nfp.hessian = Mat2{-fp.hessian.xx, -fp.hessian.xp, -fp.hessian.pp};
      nfp.energy = -fp.energy;
      nfp.classification = FixedPointClass::GenericMinimum;
      double lo, hi;
      Vec2 v;
      eig_sym2(nfp.hessian, lo, hi, v);
      nfp.eig_lo = lo;
      nfp.eig_hi = hi;
      return {std::move(neg), nfp, -1};
    }
    case FixedPointClass::NonGeneric:
      if (h.has_symbol() && rotation_invariant_about(h.symbol(), fp.location))
        return {h, fp, +1};
      throw NonGeneric(
          "fixed point has a singular Hessian (as in a pure quartic well); the "
          "quantization rule requires a nondegenerate extremum");
    case FixedPointClass::Saddle:
      throw NonGeneric("fixed point is a saddle; no surrounding closed orbits to quantize");
  }
  throw Error("unreachable");
}

}  // namespace detail

/// The correction profile of the quantization rule,
///   c(A) = (1/omega(A)) <2 [H_xx H_pp - H_xp^2]>_orbit,
/// evaluated on the orbit of action A.  omega carries the branch sign.
inline double correction_profile(const SmoothHamiltonian& h, const FixedPointReport& fp,
                                 double a, const Window& window = {}, IntegratorOptions opt = {}) {
  Orbit orbit = orbit_with_action(h, fp, a, window, opt);
  double avg = orbit.average([&h](double x, double p) {
    Mat2 q = h.hessian(x, p);
    return 2.0 * (q.xx * q.pp - q.xp * q.xp);
  });
  return avg / orbit.frequency();
}

namespace detail {

inline LevelResult bs_level(const WorkingBranch& br, int n, double hbar, int order,
                            const Window& window, const IntegratorOptions& opt) {
  LevelResult lev;
  lev.n = n;
  lev.action = (n + 0.5) * hbar;
  if (lev.action > window.action_ceiling)
    throw OutOfWindow("A_n exceeds the declared action ceiling");

  Orbit orbit = orbit_with_action(br.h, br.fp, lev.action, window, opt);
  lev.orbit_drift = orbit.energy_drift();
  lev.e0 = br.sign * orbit.energy();

  if (order == 2) {
    auto profile = [&](double a) { return correction_profile(br.h, br.fp, a, window, opt); };
    DiffResult d = richardson_ddA(profile, lev.action);
    lev.correction = br.sign * hbar * hbar / 48.0 * d.value;
    lev.diff_step = d.step;
    lev.diff_error = hbar * hbar / 48.0 * d.error_estimate;
  }
  lev.e2 = lev.e0 + lev.correction;
  return lev;
}

}  // namespace detail

/// One Bohr-Sommerfeld eigenvalue at A = (n + 1/2) hbar; order 0 is the
/// leading rule, order 2 adds (hbar^2/48) d/dA [c(A)].
inline double bs_eigenvalue(const SmoothHamiltonian& h, const FixedPointReport& fp, int n,
                            double hbar, int order, const Window& window = {},
                            IntegratorOptions opt = {}) {
  if (order != 0 && order != 2) throw Error("bs_eigenvalue: order must be 0 or 2");
  if (n < 0) throw Error("bs_eigenvalue: negative quantum number");
  detail::WorkingBranch br = detail::resolve_branch(h, fp);
  LevelResult lev = detail::bs_level(br, n, hbar, order, window, opt);
  return order == 0 ? lev.e0 : lev.e2;
}

/// The spectrum over a quantum-number range; out-of-window levels are
/// reported as skipped rather than fabricated.
inline SpectrumResult bs_spectrum(const SmoothHamiltonian& h, const FixedPointReport& fp,
                                  int n_lo, int n_hi, double hbar, int order,
                                  const Window& window = {}, IntegratorOptions opt = {}) {
  if (order != 0 && order != 2) throw Error("bs_spectrum: order must be 0 or 2");
  if (n_lo < 0 || n_hi < n_lo) throw Error("bs_spectrum: bad level range");
  if (hbar <= 0.0) throw Error("bs_spectrum: hbar must be positive");

  detail::WorkingBranch br = detail::resolve_branch(h, fp);
  SpectrumResult out;
  out.hamiltonian = h.name();
  out.hbar = hbar;
  out.order = order;
  out.negated = (br.sign == -1);
  out.window = window;
  for (int n = n_lo; n <= n_hi; ++n) {
    try {
      out.levels.push_back(detail::bs_level(br, n, hbar, order, window, opt));
    } catch (const OutOfWindow& e) {
      LevelResult lev;
      lev.n = n;
      lev.action = (n + 0.5) * hbar;
      lev.skipped = true;
      lev.skip_reason = e.what();
      out.levels.push_back(lev);
    } catch (const OrbitNotClosed& e) {
      LevelResult lev;
      lev.n = n;
      lev.action = (n + 0.5) * hbar;
      lev.skipped = true;
      lev.skip_reason = e.what();
      out.levels.push_back(lev);
    }
  }
  return out;
}

/// CSV with the fixed column schema; skipped levels are withheld here (the
/// JSON document carries them with their reasons).
inline std::string spectrum_to_csv(const SpectrumResult& r) {
  std::ostringstream os;
  os << "n,A,E0,E2,corr,err_est\n";
  for (const auto& lev : r.levels) {
    if (lev.skipped) continue;
    const double err_est =
        r.order == 2 ? lev.diff_error + std::abs(lev.e0) * 1e-11 : std::abs(lev.e0) * 1e-11;
    os << lev.n << ',' << fmt_double(lev.action) << ',' << fmt_double(lev.e0) << ','
       << fmt_double(lev.e2) << ',' << fmt_double(lev.correction) << ',' << fmt_double(err_est)
       << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json spectrum_to_json(const SpectrumResult& r) {
  nlohmann::ordered_json j;
  j["hamiltonian"] = r.hamiltonian;
  j["hbar"] = r.hbar;
  j["order"] = r.order;
  j["negated"] = r.negated;
  if (std::isfinite(r.window.action_ceiling)) j["action_ceiling"] = r.window.action_ceiling;
  if (std::isfinite(r.window.energy_excursion)) j["energy_excursion"] = r.window.energy_excursion;
  j["levels"] = nlohmann::ordered_json::array();
  for (const auto& lev : r.levels) {
    nlohmann::ordered_json l;
    l["n"] = lev.n;
    l["A"] = lev.action;
    if (lev.skipped) {
      l["skipped"] = true;
      l["reason"] = lev.skip_reason;
    } else {
      l["E0"] = lev.e0;
      l["E2"] = lev.e2;
      l["corr"] = lev.correction;
      l["diff_step"] = lev.diff_step;
      l["diff_error"] = lev.diff_error;
      l["orbit_drift"] = lev.orbit_drift;
    }
    j["levels"].push_back(l);
  }
  return j;
}

inline std::string oracle_to_csv(const OracleSpectrum& o) {
  std::ostringstream os;
  os << "n,E,conv_est\n";
  for (std::size_t n = 0; n < o.eigenvalues.size(); ++n)
    os << n << ',' << fmt_double(o.eigenvalues[n]) << ',' << fmt_double(o.convergence[n]) << '\n';
  return os.str();
}

inline nlohmann::ordered_json oracle_to_json(const OracleSpectrum& o) {
  nlohmann::ordered_json j;
  j["method"] = o.method;
  j["hbar"] = o.hbar;
  j["resolution"] = o.resolution;
  if (o.method == "grid") {
    j["domain"] = {o.domain_lo, o.domain_hi};
  }
  j["eigenvalues"] = o.eigenvalues;
  j["convergence"] = o.convergence;
  return j;
}

}  // namespace starspec

#endif  // STARSPEC_SPECTRUM_HPP
