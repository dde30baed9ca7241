#ifndef STARSPEC_DYNAMICS_HPP
#define STARSPEC_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "starspec/errors.hpp"
#include "starspec/linear_symplectic.hpp"
#include "starspec/polysym.hpp"
#include "starspec/rational.hpp"
#include "starspec/smooth_hamiltonian.hpp"

namespace starspec {

enum class FixedPointClass { GenericMinimum, GenericMaximum, Saddle, NonGeneric };

inline const char* to_string(FixedPointClass c) {
  switch (c) {
    case FixedPointClass::GenericMinimum: return "GenericMinimum";
    case FixedPointClass::GenericMaximum: return "GenericMaximum";
    case FixedPointClass::Saddle: return "Saddle";
    case FixedPointClass::NonGeneric: return "NonGeneric";
  }
  return "?";
}

struct FixedPointReport {
  Vec2 location;
  FixedPointClass classification = FixedPointClass::NonGeneric;
  Mat2 hessian;
  double hessian_det = 0.0;
  double eig_lo = 0.0;  // smaller Hessian eigenvalue
  double eig_hi = 0.0;
  double energy = 0.0;  // H at the fixed point
  int iterations = 0;
};

/// Working region for the action-energy maps.  The energy excursion bound
/// caps |H - H(fixed point)| along admitted orbits; the action ceiling caps
/// the quantizable action directly.
struct Window {
  double energy_excursion = std::numeric_limits<double>::infinity();
  double action_ceiling = std::numeric_limits<double>::infinity();
};

struct IntegratorOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  long max_steps = 2000000;
};

namespace detail {

/// Dormand-Prince 5(4) embedded Runge-Kutta for the 2-dimensional
/// Hamiltonian flow  xdot = H_p, pdot = -H_x.
class HamiltonFlow {
 public:
  HamiltonFlow(const SmoothHamiltonian& h, IntegratorOptions opt) : h_(&h), opt_(opt) {}

  Vec2 rhs(Vec2 z) const {
    Vec2 g = h_->gradient(z.x, z.p);
    return {g.p, -g.x};
  }

  /// One adaptive step from (t, z) with suggested size *h (clipped to t_end
  /// when finite).  Returns the accepted step size; updates t, z, *h.
  double step(double& t, Vec2& z, double& h, double h_max) const {
    for (int attempt = 0; attempt < 200; ++attempt) {
      double hh = std::min(h, h_max);
      Vec2 k1 = rhs(z);
      Vec2 k2 = rhs(adv(z, hh, {{0.2, k1}}));
      Vec2 k3 = rhs(adv(z, hh, {{3.0 / 40, k1}, {9.0 / 40, k2}}));
      Vec2 k4 = rhs(adv(z, hh, {{44.0 / 45, k1}, {-56.0 / 15, k2}, {32.0 / 9, k3}}));
      Vec2 k5 = rhs(adv(z, hh,
                        {{19372.0 / 6561, k1},
                         {-25360.0 / 2187, k2},
                         {64448.0 / 6561, k3},
                         {-212.0 / 729, k4}}));
      Vec2 k6 = rhs(adv(z, hh,
                        {{9017.0 / 3168, k1},
                         {-355.0 / 33, k2},
                         {46732.0 / 5247, k3},
                         {49.0 / 176, k4},
                         {-5103.0 / 18656, k5}}));
      Vec2 y5 = adv(z, hh,
                    {{35.0 / 384, k1},
                     {500.0 / 1113, k3},
                     {125.0 / 192, k4},
                     {-2187.0 / 6784, k5},
                     {11.0 / 84, k6}});
      Vec2 k7 = rhs(y5);
      // embedded 4th-order error coefficients
      double ex = err_comp(hh, k1.x, k3.x, k4.x, k5.x, k6.x, k7.x);
      double ep = err_comp(hh, k1.p, k3.p, k4.p, k5.p, k6.p, k7.p);
      double sx = opt_.atol + opt_.rtol * std::max(std::abs(z.x), std::abs(y5.x));
      double sp = opt_.atol + opt_.rtol * std::max(std::abs(z.p), std::abs(y5.p));
      double err = std::sqrt(0.5 * ((ex / sx) * (ex / sx) + (ep / sp) * (ep / sp)));
      double factor;
      if (!std::isfinite(err)) {
        factor = 0.2;
        err = 2.0;
      } else {
        factor = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        factor = std::clamp(factor, 0.2, 5.0);
      }
      if (err <= 1.0) {
        t += hh;
        z = y5;
        h = std::min(hh * factor, h_max);
        return hh;
      }
      h = hh * factor;
    }
    throw OrbitNotClosed("step size control failed to find an acceptable step");
  }

  /// Integrate exactly to t_target (clipping the last steps).
  void integrate_to(double& t, Vec2& z, double t_target, double& h) const {
    int guard = 0;
    while (t < t_target && ++guard < 1000000) {
      double h_max = t_target - t;
      step(t, z, h, h_max);
    }
    if (t < t_target) throw OrbitNotClosed("integrate_to exhausted its budget");
  }

 private:
  static Vec2 adv(Vec2 z, double h, std::initializer_list<std::pair<double, Vec2>> ks) {
    for (auto& [c, k] : ks) {
      z.x += h * c * k.x;
      z.p += h * c * k.p;
    }
    return z;
  }
  static double err_comp(double h, double k1, double k3, double k4, double k5, double k6,
                         double k7) {
    return h * (71.0 / 57600 * k1 - 71.0 / 16695 * k3 + 71.0 / 1920 * k4 -
                17253.0 / 339200 * k5 + 22.0 / 525 * k6 - 1.0 / 40 * k7);
  }

  const SmoothHamiltonian* h_;
  IntegratorOptions opt_;
};

inline double cross2(Vec2 a, Vec2 b) { return a.x * b.p - a.p * b.x; }
inline double dot2(Vec2 a, Vec2 b) { return a.x * b.x + a.p * b.p; }
inline double norm2(Vec2 a) { return std::sqrt(dot2(a, a)); }

/// Newton projection of z onto the level set H = e along the gradient;
/// removes the integrator's radial drift from stored samples (the tangential
/// displacement it causes is harmless for period-average quadratures).
inline Vec2 project_to_level(const SmoothHamiltonian& h, Vec2 z, double e) {
  for (int it = 0; it < 3; ++it) {
    const double r = h.value(z.x, z.p) - e;
    if (r == 0.0) break;
    const Vec2 g = h.gradient(z.x, z.p);
    const double g2 = dot2(g, g);
    if (g2 < 1e-300) break;
    z = {z.x - g.x * r / g2, z.p - g.p * r / g2};
  }
  return z;
}

/// Hessian eigen-decomposition (symmetric 2x2); returns eigenvalues sorted
/// ascending and the unit eigenvector of the smaller one.
inline void eig_sym2(const Mat2& q, double& lo, double& hi, Vec2& v_lo) {
  const double tr = q.trace();
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - q.det()));
  lo = 0.5 * tr - disc;
  hi = 0.5 * tr + disc;
  // (q - lo I) v = 0; pick the better-conditioned of the two row solutions
  Vec2 v1 = {q.xp, lo - q.xx};
  Vec2 v2 = {lo - q.pp, q.xp};
  Vec2 v = (norm2(v1) >= norm2(v2)) ? v1 : v2;
  if (norm2(v) < 1e-300) v = (q.xx <= q.pp) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
  double n = norm2(v);
  v = {v.x / n, v.p / n};
  // deterministic sign: first significant component positive
  if (v.x < -1e-14 || (std::abs(v.x) <= 1e-14 && v.p < 0)) v = {-v.x, -v.p};
  v_lo = v;
}

}  // namespace detail

/// Newton iteration on the gradient of H from `guess`; classifies the
/// critical point by its Hessian.  NonGeneric means |det| below 1e-10
/// relative to the squared largest Hessian entry.
inline FixedPointReport find_fixed_point(const SmoothHamiltonian& h, Vec2 guess) {
  Vec2 z = guess;
  FixedPointReport rep;
  const int max_iter = 100;
  bool converged = false;
  double g_prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    Vec2 g = h.gradient(z.x, z.p);
    Mat2 q = h.hessian(z.x, z.p);
    const double qscale = std::max({std::abs(q.xx), std::abs(q.xp), std::abs(q.pp), 1e-300});
    const double gscale = std::max(1.0, qscale * std::max(1.0, detail::norm2(z)));
    const double gnorm = std::max(std::abs(g.x), std::abs(g.p));
    rep.iterations = it;
    if (gnorm < 1e-12 * gscale) {
      converged = true;
      // polish while the gradient still shrinks (degenerate critical points
      // converge only linearly and the classification needs the limit)
      if (gnorm == 0.0 || gnorm > 0.7 * g_prev) break;
    }
    g_prev = gnorm;
    double det = q.det();
    if (std::abs(det) < 1e-300) break;
    Vec2 dz = {(q.pp * g.x - q.xp * g.p) / det, (q.xx * g.p - q.xp * g.x) / det};
    z = {z.x - dz.x, z.p - dz.p};
    if (!std::isfinite(z.x) || !std::isfinite(z.p))
      throw NoFixedPoint("Newton iterate left the finite plane");
  }
  if (!converged) throw NoFixedPoint("no convergence in 100 Newton iterations");

  rep.location = z;
  rep.hessian = h.hessian(z.x, z.p);
  rep.hessian_det = rep.hessian.det();
  rep.energy = h.value(z.x, z.p);
  Vec2 v;
  detail::eig_sym2(rep.hessian, rep.eig_lo, rep.eig_hi, v);
  const double scale =
      std::max({std::abs(rep.hessian.xx), std::abs(rep.hessian.xp), std::abs(rep.hessian.pp)});
  if (std::abs(rep.hessian_det) < 1e-10 * scale * scale) {
    rep.classification = FixedPointClass::NonGeneric;
  } else if (rep.hessian_det < 0.0) {
    rep.classification = FixedPointClass::Saddle;
  } else {
    rep.classification = rep.hessian.trace() > 0 ? FixedPointClass::GenericMinimum
                                                 : FixedPointClass::GenericMaximum;
  }
  return rep;
}

struct OrbitSample {
  double t = 0.0;
  double x = 0.0;
  double p = 0.0;
};

/// One traced closed level set.  Samples are uniform in time over one loop;
/// averages and the action are computed from them by the periodic trapezoid
/// rule, which is spectrally accurate for smooth orbits.
class Orbit {
 public:
  Orbit(SmoothHamiltonian h, FixedPointReport fp, Vec2 z0, double period, int orientation,
        double energy, double drift, double closure, IntegratorOptions opt)
      : h_(std::move(h)),
        fp_(fp),
        z0_(z0),
        period_(period),
        orientation_(orientation),
        energy_(energy),
        energy_drift_(drift),
        closure_error_(closure),
        opt_(opt) {
    resample(64);
    double prev = action_;
    for (int m = 128; m <= 1024; m *= 2) {
      resample(m);
      if (std::abs(action_ - prev) <= std::max(1e-13, 1e-12 * std::abs(action_))) break;
      prev = action_;
    }
  }

  double energy() const { return energy_; }
  double period() const { return period_; }
  /// Enclosed area / 2 pi, always positive.
  double action() const { return action_; }
  /// Signed frequency dE/dA: positive when the flow circulates clockwise in
  /// (x, p), negative on branches where the energy decreases with action.
  double frequency() const { return orientation_ * 2.0 * M_PI / period_; }
  int orientation() const { return orientation_; }
  const std::vector<OrbitSample>& samples() const { return samples_; }
  const FixedPointReport& fixed_point() const { return fp_; }
  const SmoothHamiltonian& hamiltonian() const { return h_; }
  double energy_drift() const { return energy_drift_; }
  double closure_error() const { return closure_error_; }

  /// Time average of F over the loop (= angle average, since the angle
  /// advances uniformly in time).  Refines the sampling until the average
  /// stabilizes.
  double average(const std::function<double(double, double)>& f) const {
    std::vector<OrbitSample> pts = samples_;
    double prev = trapezoid(pts, f);
    for (int round = 0; round < 4; ++round) {
      pts = refine(pts);
      double cur = trapezoid(pts, f);
      if (std::abs(cur - prev) <= std::max(1e-13, 1e-11 * std::abs(cur))) return cur;
      prev = cur;
    }
    return prev;
  }

 private:
  void resample(int m) {
    detail::HamiltonFlow flow(h_, opt_);
    samples_.clear();
    samples_.reserve(m + 1);
    Vec2 z = z0_;
    double t = 0.0, h = period_ / (8.0 * m);
    samples_.push_back({0.0, z.x, z.p});
    for (int k = 1; k <= m; ++k) {
      flow.integrate_to(t, z, period_ * k / m, h);
      z = detail::project_to_level(h_, z, energy_);
      samples_.push_back({t, z.x, z.p});
    }
    // action via (1/2pi) int p xdot dt, periodic trapezoid, sign dropped
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      Vec2 g = h_.gradient(samples_[k].x, samples_[k].p);
      acc += samples_[k].p * g.p;  // xdot = H_p
    }
    action_ = std::abs(acc) * period_ / m / (2.0 * M_PI);
  }

  std::vector<OrbitSample> refine(const std::vector<OrbitSample>& pts) const {
    detail::HamiltonFlow flow(h_, opt_);
    std::vector<OrbitSample> out;
    out.reserve(2 * pts.size());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      out.push_back(pts[k]);
      Vec2 z = {pts[k].x, pts[k].p};
      double t = pts[k].t, h = (pts[k + 1].t - pts[k].t) / 8.0;
      flow.integrate_to(t, z, 0.5 * (pts[k].t + pts[k + 1].t), h);
      z = detail::project_to_level(h_, z, energy_);
      out.push_back({t, z.x, z.p});
    }
    out.push_back(pts.back());
    return out;
  }

  double trapezoid(const std::vector<OrbitSample>& pts,
                   const std::function<double(double, double)>& f) const {
    // uniform periodic grid: endpoint sample duplicates the start
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) acc += f(pts[k].x, pts[k].p);
    return acc / static_cast<double>(pts.size() - 1);
  }

  SmoothHamiltonian h_;
  FixedPointReport fp_;
  Vec2 z0_;
  double period_;
  int orientation_;
  double energy_;
  double action_ = 0.0;
  double energy_drift_;
  double closure_error_;
  IntegratorOptions opt_;
  std::vector<OrbitSample> samples_;
};

namespace detail {

/// Traces the closed orbit through z0, detecting the period by the winding
/// angle around the fixed point reaching 2 pi; the final section crossing is
/// refined by bisection to 1e-13 in time.
inline Orbit trace_from_point(const SmoothHamiltonian& h, const FixedPointReport& fp, Vec2 z0,
                              IntegratorOptions opt) {
  HamiltonFlow flow(h, opt);
  const Vec2 c = fp.location;
  const double e0 = h.value(z0.x, z0.p);
  const double escale = std::max({std::abs(e0), std::abs(e0 - fp.energy), 1e-12});

  // initial step scale from the local angular rate at the start point
  const double r0 = std::max(norm2({z0.x - c.x, z0.p - c.p}), 1e-300);
  const double speed = std::max(norm2(flow.rhs(z0)), 1e-300);
  const double tau = 2.0 * M_PI * r0 / speed;  // crude one-revolution estimate
  double t = 0.0, hstep = 1e-3 * tau;
  double h_max = tau / 24.0;

  Vec2 z = z0;
  Vec2 r_prev = {z.x - c.x, z.p - c.p};
  double winding = 0.0;
  double drift = 0.0;
  const double target = 2.0 * M_PI;

  double t_prev = 0.0;
  Vec2 z_prev = z;
  double w_start = 0.0;  // winding at the start of the bracketing step
  bool bracketed = false;
  for (long steps = 0; steps < opt.max_steps; ++steps) {
    t_prev = t;
    z_prev = z;
    w_start = winding;
    flow.step(t, z, hstep, h_max);
    Vec2 r = {z.x - c.x, z.p - c.p};
    double dth = std::atan2(cross2(r_prev, r), dot2(r_prev, r));
    winding += dth;
    drift = std::max(drift, std::abs(h.value(z.x, z.p) - e0) / escale);
    // keep at least ~24 steps per revolution
    if (std::abs(dth) > 1e-12) {
      double per_rev = (t - t_prev) * 2.0 * M_PI / std::abs(dth);
      h_max = per_rev / 24.0;
    }
    r_prev = r;
    if (std::abs(winding) >= target) {
      bracketed = true;
      break;
    }
  }
  if (!bracketed)
    throw OrbitNotClosed("orbit failed to close within the step budget (separatrix nearby?)");
  double lo = t_prev, hi = t;
  Vec2 z_at_hi = z;
  const Vec2 rp0 = {z_prev.x - c.x, z_prev.p - c.p};
  for (int it = 0; it < 80 && (hi - lo) > 1e-13 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    Vec2 zm = z_prev;
    double tm = t_prev, hm = (mid - t_prev) / 4.0;
    if (mid > t_prev) flow.integrate_to(tm, zm, mid, hm);
    Vec2 rm = {zm.x - c.x, zm.p - c.p};
    double wm = w_start + std::atan2(cross2(rp0, rm), dot2(rp0, rm));
    if (std::abs(wm) >= target) {
      hi = mid;
      z_at_hi = zm;
    } else {
      lo = mid;
    }
  }
  const double period = hi;
  const int orientation = winding < 0 ? +1 : -1;
  const double closure = norm2({z_at_hi.x - z0.x, z_at_hi.p - z0.p}) /
                         std::max(1e-300, norm2({z0.x - c.x, z0.p - c.p}));
  return Orbit(h, fp, z0, period, orientation, e0, drift, closure, opt);
}

/// First crossing of H = E along the ray from the fixed point in the
/// direction of the Hessian's minor axis, located by bracketed bisection.
/// Marches outward from a tiny offset so the crossing nearest the fixed
/// point is the one found.
inline Vec2 level_set_point(const SmoothHamiltonian& h, const FixedPointReport& fp, double e) {
  if (e == fp.energy) throw OutOfWindow("requested energy equals the fixed-point energy");
  double lo_ev, hi_ev;
  Vec2 v;
  eig_sym2(fp.hessian, lo_ev, hi_ev, v);
  auto fval = [&](double t) {
    return h.value(fp.location.x + t * v.x, fp.location.p + t * v.p) - e;
  };

  double t_lo = 1e-8 * (1.0 + norm2(fp.location));
  double f_lo = fval(t_lo);
  double t_hi = t_lo;
  double f_hi = f_lo;
  bool found = false;
  for (int it = 0; it < 500; ++it) {
    t_hi *= 1.35;
    f_hi = fval(t_hi);
    if (std::signbit(f_hi) != std::signbit(f_lo)) {
      found = true;
      break;
    }
    t_lo = t_hi;
    f_lo = f_hi;
  }
  if (!found) throw OutOfWindow("level set H = E not found along the search ray");
  for (int it = 0; it < 200 && (t_hi - t_lo) > 1e-15 * t_hi; ++it) {
    double tm = 0.5 * (t_lo + t_hi);
    if (std::signbit(fval(tm)) == std::signbit(f_lo))
      t_lo = tm;
    else
      t_hi = tm;
  }
  double tc = 0.5 * (t_lo + t_hi);
  return {fp.location.x + tc * v.x, fp.location.p + tc * v.p};
}

}  // namespace detail

/// Traces the closed orbit at energy E on the branch attached to the fixed
/// point (first level-set crossing along the search ray).
inline Orbit trace_orbit(const SmoothHamiltonian& h, double e, const FixedPointReport& fp,
                         IntegratorOptions opt = {}) {
  Vec2 z0 = detail::level_set_point(h, fp, e);
  return detail::trace_from_point(h, fp, z0, opt);
}

/// (A, omega) of a traced orbit; A is the Green's-theorem line integral
/// (1/2pi) oint p dx with positive sign, omega = 2 pi / T with the branch
/// orientation sign.
inline std::pair<double, double> action_and_frequency(const Orbit& orbit) {
  return {orbit.action(), orbit.frequency()};
}

/// Time average of F over one loop.
inline double orbit_average(const Orbit& orbit, const std::function<double(double, double)>& f) {
  return orbit.average(f);
}

/// Finds the orbit with prescribed action by a monotone search in the ray
/// parameter (the action grows strictly with the starting distance for
/// nested loops, even where the energy does not).
inline Orbit orbit_with_action(const SmoothHamiltonian& h, const FixedPointReport& fp,
                               double a_target, const Window& window = {},
                               IntegratorOptions opt = {}) {
  if (a_target <= 0.0) throw OutOfWindow("requested action must be positive");
  if (a_target > window.action_ceiling)
    throw OutOfWindow("requested action exceeds the declared ceiling");
  double lo_ev, hi_ev;
  Vec2 v;
  detail::eig_sym2(fp.hessian, lo_ev, hi_ev, v);

  auto orbit_at = [&](double t) {
    Vec2 z0 = {fp.location.x + t * v.x, fp.location.p + t * v.p};
    double e = h.value(z0.x, z0.p);
    if (std::abs(e - fp.energy) > window.energy_excursion)
      throw OutOfWindow("orbit search left the declared energy window");
    return detail::trace_from_point(h, fp, z0, opt);
  };

  // circle-radius guess; the monotone bracket search absorbs the rest
  double t = std::sqrt(2.0 * a_target);
  Orbit orb = orbit_at(t);
  double g = orb.action() - a_target;
  // bracket by geometric expansion (action is monotone in t)
  double t_lo = t, t_hi = t;
  double g_lo = g, g_hi = g;
  for (int it = 0; it < 200 && g_lo > 0.0; ++it) {
    t_lo /= 1.5;
    g_lo = orbit_at(t_lo).action() - a_target;
  }
  for (int it = 0; it < 200 && g_hi < 0.0; ++it) {
    t_hi *= 1.5;
    g_hi = orbit_at(t_hi).action() - a_target;
  }
  if (g_lo > 0.0 || g_hi < 0.0) throw OutOfWindow("action bracket not found");

  Orbit best = std::move(orb);
  double g_best = std::abs(g);
  for (int it = 0; it < 80; ++it) {
    if (g_best <= 1e-12 * std::max(a_target, 1e-6)) break;
    // secant proposal clipped into the bracket, bisection fallback
    double tm = t_hi - g_hi * (t_hi - t_lo) / (g_hi - g_lo);
    if (!(tm > t_lo && tm < t_hi)) tm = 0.5 * (t_lo + t_hi);
    Orbit om = orbit_at(tm);
    double gm = om.action() - a_target;
    if (std::abs(gm) < g_best) {
      best = om;
      g_best = std::abs(gm);
    }
    if (gm < 0.0) {
      t_lo = tm;
      g_lo = gm;
    } else {
      t_hi = tm;
      g_hi = gm;
    }
    if ((t_hi - t_lo) < 1e-15 * t_hi) break;
  }
  return best;
}

/// Energy at prescribed action: Newton inversion of A(E) using
/// dA/dE = 1/omega, with a monotone ray-parameter search as fallback for
/// branches where E(A) is not monotone.
inline double energy_of_action(const SmoothHamiltonian& h, const FixedPointReport& fp,
                               double a_target, const Window& window = {},
                               IntegratorOptions opt = {}) {
  if (a_target < 0.0) throw OutOfWindow("negative action requested");
  if (a_target == 0.0) return fp.energy;
  if (a_target > window.action_ceiling)
    throw OutOfWindow("requested action exceeds the declared ceiling");

  const double a1 = std::sqrt(std::max(std::abs(fp.hessian_det), 1e-12));
  const int dir = fp.classification == FixedPointClass::GenericMaximum ? -1 : +1;
  double e = fp.energy + dir * a1 * a_target;
  try {
    for (int it = 0; it < 60; ++it) {
      Orbit orb = trace_orbit(h, e, fp, opt);
      double da = a_target - orb.action();
      if (std::abs(da) <= 1e-12 * std::max(a_target, 1e-6)) return orb.energy();
      double e_next = e + da * orb.frequency();
      if (!std::isfinite(e_next)) break;
      if (std::abs(e_next - fp.energy) > window.energy_excursion)
        throw OutOfWindow("energy inversion left the declared window");
      e = e_next;
    }
  } catch (const OrbitNotClosed&) {
    // fall through to the monotone search
  } catch (const OutOfWindow&) {
    if (std::isfinite(window.energy_excursion)) throw;
  }
  return orbit_with_action(h, fp, a_target, window, opt).energy();
}

/// H composed with a linear symplectic map (callable form); gradient and
/// Hessian transform by the chain rule.
inline SmoothHamiltonian apply_linear_symplectic(const SmoothHamiltonian& h,
                                                 const LinearSymplectic& s) {
  s.require_symplectic();
  auto hh = std::make_shared<SmoothHamiltonian>(h);
  auto value = [hh, s](double x, double p) {
    Vec2 w = s.apply({x, p});
    return hh->value(w.x, w.p);
  };
  auto grad = [hh, s](double x, double p) {
    Vec2 w = s.apply({x, p});
    Vec2 g = hh->gradient(w.x, w.p);
    return Vec2{s.xx * g.x + s.px * g.p, s.xp * g.x + s.pp * g.p};
  };
  auto hess = [hh, s](double x, double p) {
    Vec2 w = s.apply({x, p});
    Mat2 m = hh->hessian(w.x, w.p);
    // S^T M S for S = [[xx, xp], [px, pp]]
    double mxx = s.xx * (m.xx * s.xx + m.xp * s.px) + s.px * (m.xp * s.xx + m.pp * s.px);
    double mxp = s.xx * (m.xx * s.xp + m.xp * s.pp) + s.px * (m.xp * s.xp + m.pp * s.pp);
    double mpp = s.xp * (m.xx * s.xp + m.xp * s.pp) + s.pp * (m.xp * s.xp + m.pp * s.pp);
    return Mat2{mxx, mxp, mpp};
  };
  return SmoothHamiltonian::from_callable(value, grad, hess, h.name() + "∘S");
}

/// Exact symbol version of the composition (matrix entries become exact
/// binary rationals).
inline PolySymbol apply_linear_symplectic(const PolySymbol& sym, const LinearSymplectic& s) {
  s.require_symplectic();
  return sym.compose_linear(rational_from_double(s.xx), rational_from_double(s.xp),
                            rational_from_double(s.px), rational_from_double(s.pp));
}

/// Numeric form of the second self-bracket, 2 [H_xx H_pp - H_xp^2], at one
/// phase-space point (the symbolic form lives with the star-product algebra).
inline double hessian_bracket(const SmoothHamiltonian& h, Vec2 at) {
  Mat2 q = h.hessian(at.x, at.p);
  return 2.0 * (q.xx * q.pp - q.xp * q.xp);
}

/// |omega dA/dE - 1| via adjacent-energy differencing (diagnostic for the
/// frequency-action consistency contract).
inline double frequency_consistency(const SmoothHamiltonian& h, const FixedPointReport& fp,
                                    double e, IntegratorOptions opt = {}) {
  Orbit orb = trace_orbit(h, e, fp, opt);
  double de = 1e-5 * std::max(std::abs(e - fp.energy), 1e-3);
  Orbit above = trace_orbit(h, e + de, fp, opt);
  Orbit below = trace_orbit(h, e - de, fp, opt);
  double dade = (above.action() - below.action()) / (2.0 * de);
  return std::abs(orb.frequency() * dade - 1.0);
}

/// Central difference with one Richardson level, the differencing rule used
/// for d/dA of spectral profiles: step max(1e-4, 1e-3 A).
struct DiffResult {
  double value = 0.0;
  double step = 0.0;
  double error_estimate = 0.0;
};

inline DiffResult richardson_ddA(const std::function<double(double)>& f, double a,
                                 double step = 0.0) {
  DiffResult r;
  r.step = step > 0.0 ? step : std::max(1e-4, 1e-3 * std::abs(a));
  const double h = r.step;
  double d1 = (f(a + h) - f(a - h)) / (2.0 * h);
  double d2 = (f(a + 0.5 * h) - f(a - 0.5 * h)) / h;
  r.value = (4.0 * d2 - d1) / 3.0;
  r.error_estimate = std::abs(d2 - d1) / 3.0;
  return r;
}

/// Orbit samples as CSV (t, x, p, H) for plotting.
inline void export_orbit_csv(const Orbit& orbit, std::ostream& os) {
  os << "t,x,p,H\n";
  char buf[160];
  for (const auto& s : orbit.samples()) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", s.t, s.x, s.p,
                  orbit.hamiltonian().value(s.x, s.p));
    os << buf;
  }
}

}  // namespace starspec

#endif  // STARSPEC_DYNAMICS_HPP
