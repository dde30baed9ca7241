#ifndef STARSPEC_ORACLE_HPP
#define STARSPEC_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "starspec/errors.hpp"
#include "starspec/polysym.hpp"

namespace starspec {

/// Converged eigenvalues of a matrix quantization, with the per-level change
/// under the final resolution doubling as the convergence estimate.
struct OracleSpectrum {
  std::vector<double> eigenvalues;  // lowest k, ascending
  std::vector<double> convergence;  // |change| under the last doubling
  std::string method;               // "grid" or "fock"
  int resolution = 0;               // final matrix size
  double domain_lo = 0.0, domain_hi = 0.0;  // grid only
  double hbar = 0.0;
};

namespace detail {

/// Householder reduction of a dense symmetric matrix (row-major, size n) to
/// tridiagonal form; the matrix is overwritten with the accumulated
/// orthogonal transform.
inline void tred2(std::vector<double>& a, int n, std::vector<double>& d, std::vector<double>& e) {
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (int k = 0; k <= l; ++k) scale += std::abs(A(i, k));
      if (scale == 0.0) {
        e[i] = A(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          A(i, k) /= scale;
          h += A(i, k) * A(i, k);
        }
        double f = A(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        A(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          A(j, i) = A(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += A(j, k) * A(i, k);
          for (int k = j + 1; k <= l; ++k) g += A(k, j) * A(i, k);
          e[j] = g / h;
          f += e[j] * A(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = A(i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) A(j, k) -= f * e[k] + g * A(i, k);
        }
      }
    } else {
      e[i] = A(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i - 1;
    if (d[i] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += A(i, k) * A(k, j);
        for (int k = 0; k <= l; ++k) A(k, j) -= g * A(k, i);
      }
    }
    d[i] = A(i, i);
    A(i, i) = 1.0;
    for (int j = 0; j <= l; ++j) A(j, i) = A(i, j) = 0.0;
  }
}

/// Implicit-shift QL on a tridiagonal matrix, accumulating rotations into z
/// (columns of z end up as eigenvectors).
inline void tqli(std::vector<double>& d, std::vector<double>& e, int n, std::vector<double>& z) {
  auto Z = [&](int i, int j) -> double& { return z[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == 50) throw Error("tqli: too many QL iterations");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = Z(k, i + 1);
            Z(k, i + 1) = s * Z(k, i) + c * f;
            Z(k, i) = c * Z(k, i) - s * f;
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

struct EighResult {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // row-major; column j = eigenvector of values[j]
};

/// Dense symmetric eigensolver: Householder tridiagonalization followed by
/// implicit-shift QL, then an ascending sort.  Deterministic.
inline EighResult eigh(std::vector<double> m, int n) {
  std::vector<double> d, e;
  tred2(m, n, d, e);
  tqli(d, e, n, m);
  // sort ascending, permuting columns
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return d[a] < d[b]; });
  EighResult r;
  r.values.resize(n);
  r.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    r.values[j] = d[idx[j]];
    for (int i = 0; i < n; ++i)
      r.vectors[static_cast<std::size_t>(i) * n + j] = m[static_cast<std::size_t>(i) * n + idx[j]];
  }
  return r;
}

/// max_j ||M v_j - lambda_j v_j||_2 over the first k pairs.
inline double eig_residual(const std::vector<double>& mat, int n, const EighResult& eig, int k) {
  double worst = 0.0;
  for (int j = 0; j < k; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int l = 0; l < n; ++l)
        s += mat[static_cast<std::size_t>(i) * n + l] *
             eig.vectors[static_cast<std::size_t>(l) * n + j];
      s -= eig.values[j] * eig.vectors[static_cast<std::size_t>(i) * n + j];
      acc += s * s;
    }
    worst = std::max(worst, std::sqrt(acc));
  }
  return worst;
}

inline double mat_norm_inf(const std::vector<double>& mat, int n) {
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(mat[static_cast<std::size_t>(i) * n + j]);
    worst = std::max(worst, row);
  }
  return worst;
}

/// Self-checked lowest-k eigenvalues (and boundary amplitudes of the
/// corresponding vectors, for the grid oracle's domain control).
inline std::vector<double> checked_lowest(const std::vector<double>& mat, int n, int k,
                                          double* boundary_amp = nullptr) {
  EighResult eig = eigh(mat, n);
  double res = eig_residual(mat, n, eig, std::min(k, n));
  if (res > 1e-10 * std::max(1.0, mat_norm_inf(mat, n)))
    throw Error("eigensolver self-check failed: residual " + std::to_string(res));
  if (boundary_amp) {
    double amp = 0.0;
    for (int j = 0; j < std::min(k, n); ++j) {
      amp = std::max(amp, std::abs(eig.vectors[static_cast<std::size_t>(0) * n + j]));
      amp = std::max(amp, std::abs(eig.vectors[static_cast<std::size_t>(n - 1) * n + j]));
    }
    *boundary_amp = amp;
  }
  return {eig.values.begin(), eig.values.begin() + std::min(k, n)};
}

}  // namespace detail

/// Single-shot Fourier-grid (pseudospectral) levels: kinetic term diagonal in
/// the plane-wave basis, potential diagonal on the grid.
inline std::vector<double> grid_levels(const std::function<double(double)>& v, double mass,
                                       double hbar, double a, double b, int n, int k,
                                       double* boundary_amp = nullptr) {
  if (n < 8 || (n & (n - 1)) != 0) throw Error("grid_levels: N must be a power of two >= 8");
  const double len = b - a;
  if (len <= 0.0) throw Error("grid_levels: empty domain");
  // kinetic kernel t(d) = (1/N) sum_m w_m cos(2 pi m d / N), w = (hbar kk)^2/2m
  std::vector<double> tker(n, 0.0);
  for (int m = -n / 2; m < n / 2; ++m) {
    const double kk = 2.0 * M_PI * m / len;
    const double w = hbar * hbar * kk * kk / (2.0 * mass);
    for (int d = 0; d < n; ++d) tker[d] += w * std::cos(2.0 * M_PI * m * d / n);
  }
  for (int d = 0; d < n; ++d) tker[d] /= n;

  std::vector<double> mat(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double xi = a + len * i / n;
    for (int j = 0; j < n; ++j) {
      int d = std::abs(i - j);
      mat[static_cast<std::size_t>(i) * n + j] = tker[d];
    }
    mat[static_cast<std::size_t>(i) * n + i] += v(xi);
  }
  return detail::checked_lowest(mat, n, k, boundary_amp);
}

/// Grid oracle with automatic refinement: doubles N (up to 4 times) until
/// the lowest k levels move less than tol, growing the domain whenever the
/// reported eigenvectors fail to vanish at the boundary.
inline OracleSpectrum grid_spectrum(const std::function<double(double)>& v, double mass,
                                    double hbar, double a, double b, int n, int k,
                                    double tol = 1e-10) {
  OracleSpectrum out;
  out.method = "grid";
  out.hbar = hbar;
  double lo = a, hi = b;
  for (int grow = 0; grow < 6; ++grow) {
    double amp = 0.0;
    std::vector<double> prev = grid_levels(v, mass, hbar, lo, hi, n, k, &amp);
    if (amp > 1e-8) {
      const double c = 0.5 * (lo + hi), half = 0.75 * (hi - lo);
      lo = c - half;
      hi = c + half;
      continue;
    }
    int nn = n;
    for (int doubling = 0; doubling < 4; ++doubling) {
      nn *= 2;
      std::vector<double> cur = grid_levels(v, mass, hbar, lo, hi, nn, k, &amp);
      if (amp > 1e-8) break;  // leaked through the boundary at higher resolution
      std::vector<double> conv(k);
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        conv[i] = std::abs(cur[i] - prev[i]);
        worst = std::max(worst, conv[i]);
      }
      if (worst < tol) {
        out.eigenvalues = cur;
        out.convergence = conv;
        out.resolution = nn;
        out.domain_lo = lo;
        out.domain_hi = hi;
        return out;
      }
      prev = std::move(cur);
    }
    if (amp > 1e-8) {
      const double c = 0.5 * (lo + hi), half = 0.75 * (hi - lo);
      lo = c - half;
      hi = c + half;
      continue;
    }
    throw OracleDiverged("grid oracle: levels did not stabilize after 4 doublings");
  }
  throw OracleDiverged("grid oracle: domain growth did not confine the requested levels");
}

/// Initial grid domain for a confining potential: classical turning points
/// at the target energy, padded by five local oscillator widths.  The
/// adaptive oracle widens further if the states still leak.
inline std::pair<double, double> suggest_grid_domain(const std::function<double(double)>& v,
                                                     double mass, double hbar, double x_min,
                                                     double e_target) {
  auto scan = [&](double dir) {
    double x = x_min, step = 0.25;
    for (int it = 0; it < 400; ++it) {
      if (v(x + dir * step) > e_target) return x + dir * step;
      x += dir * step;
      step *= 1.15;
    }
    return x;
  };
  const double left = scan(-1.0), right = scan(+1.0);
  const double h = 1e-4;
  double vpp = (v(x_min + h) - 2.0 * v(x_min) + v(x_min - h)) / (h * h);
  double width = vpp > 0.0 ? std::sqrt(hbar / std::sqrt(mass * vpp)) : std::sqrt(hbar);
  return {left - 5.0 * width, right + 5.0 * width};
}

namespace detail {

struct CMat {
  int n = 0;
  std::vector<std::complex<double>> a;
  explicit CMat(int nn = 0) : n(nn), a(static_cast<std::size_t>(nn) * nn) {}
  std::complex<double>& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const std::complex<double>& at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * n + j];
  }
};

inline CMat cmul(const CMat& x, const CMat& y) {
  CMat r(x.n);
  const int n = x.n;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) {
      const std::complex<double> xv = x.at(i, l);
      if (xv == 0.0) continue;
      for (int j = 0; j < n; ++j) r.at(i, j) += xv * y.at(l, j);
    }
  return r;
}

inline CMat cidentity(int n) {
  CMat r(n);
  for (int i = 0; i < n; ++i) r.at(i, i) = 1.0;
  return r;
}

/// Ladder matrices of x and p in the size-n oscillator basis.
inline void ladder_xp(int n, double hbar, CMat& x, CMat& p) {
  x = CMat(n);
  p = CMat(n);
  const double s = std::sqrt(hbar / 2.0);
  for (int m = 1; m < n; ++m) {
    const double r = std::sqrt(static_cast<double>(m));
    x.at(m - 1, m) = s * r;
    x.at(m, m - 1) = s * r;
    p.at(m - 1, m) = std::complex<double>(0.0, -s * r);
    p.at(m, m - 1) = std::complex<double>(0.0, s * r);
  }
}

/// Fully symmetrized (Weyl) quantization of x^a p^b via the McCoy sum
/// (1/2^a) sum_k C(a,k) x^k p^b x^(a-k).
inline CMat weyl_monomial(const std::vector<CMat>& xpow, const CMat& pb, int a) {
  const int n = pb.n;
  CMat acc(n);
  double norm = std::pow(0.5, a);
  for (int k = 0; k <= a; ++k) {
    double c = norm * to_double(binomial(a, k));
    CMat term = cmul(cmul(xpow[k], pb), xpow[a - k]);
    for (std::size_t idx = 0; idx < acc.a.size(); ++idx) acc.a[idx] += c * term.a[idx];
  }
  return acc;
}

}  // namespace detail

/// Single-shot Fock (oscillator-basis) levels of the Weyl quantization of a
/// real polynomial symbol, truncated at basis size n; the top 20% of the
/// basis is excluded from reporting.
inline std::vector<double> fock_levels(const PolySymbol& sym, double hbar, int n, int k) {
  if (!sym.is_real()) throw Error("fock_levels: symbol must be real");
  const int usable = static_cast<int>(0.8 * n);
  if (k > usable) throw Error("fock_levels: requested levels inside the truncation edge");

  int ax = 0, ap = 0;
  for (const auto& [m, c] : sym.terms()) {
    ax = std::max(ax, m.x);
    ap = std::max(ap, m.p);
  }
  detail::CMat xm, pm;
  detail::ladder_xp(n, hbar, xm, pm);
  std::vector<detail::CMat> xpow(ax + 1), ppow(ap + 1);
  xpow[0] = detail::cidentity(n);
  for (int i = 1; i <= ax; ++i) xpow[i] = detail::cmul(xpow[i - 1], xm);
  ppow[0] = detail::cidentity(n);
  for (int j = 1; j <= ap; ++j) ppow[j] = detail::cmul(ppow[j - 1], pm);

  detail::CMat ham(n);
  for (const auto& [m, c] : sym.terms()) {
    const double coeff = to_double(c.re) * std::pow(hbar, m.h);
    detail::CMat w = detail::weyl_monomial(xpow, ppow[m.p], m.x);
    for (std::size_t idx = 0; idx < ham.a.size(); ++idx) ham.a[idx] += coeff * w.a[idx];
  }
  // symmetrize away the floating-point skew
  double max_im = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      auto hij = 0.5 * (ham.at(i, j) + std::conj(ham.at(j, i)));
      ham.at(i, j) = hij;
      ham.at(j, i) = std::conj(hij);
      max_im = std::max(max_im, std::abs(hij.imag()));
    }

  double scale = 0.0;
  for (const auto& z : ham.a) scale = std::max(scale, std::abs(z));

  std::vector<double> levels;
  if (max_im <= 1e-14 * std::max(1.0, scale)) {
    std::vector<double> mat(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) mat[static_cast<std::size_t>(i) * n + j] = ham.at(i, j).real();
    levels = detail::checked_lowest(mat, n, usable);
  } else {
    // embed the Hermitian matrix as a real symmetric one of twice the size;
    // eigenvalues come in exact pairs (1-D bound spectra are nondegenerate)
    const int nn = 2 * n;
    std::vector<double> mat(static_cast<std::size_t>(nn) * nn, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double re = ham.at(i, j).real(), im = ham.at(i, j).imag();
        mat[static_cast<std::size_t>(i) * nn + j] = re;
        mat[static_cast<std::size_t>(i + n) * nn + j + n] = re;
        mat[static_cast<std::size_t>(i) * nn + j + n] = -im;
        mat[static_cast<std::size_t>(i + n) * nn + j] = im;
      }
    std::vector<double> doubled = detail::checked_lowest(mat, nn, 2 * usable);
    for (int i = 0; i < usable; ++i) levels.push_back(doubled[2 * i]);
  }
  levels.resize(std::min<std::size_t>(levels.size(), usable));
  levels.resize(k);
  return levels;
}

/// Fock oracle with automatic truncation doubling.  Rejects symbols whose
/// leading form is odd-degree or changes sign (not bounded below).
inline OracleSpectrum fock_spectrum(const PolySymbol& sym, double hbar, int n, int k,
                                    double tol = 1e-10) {
  const int deg = sym.xp_degree();
  if (deg <= 0) throw Error("fock_spectrum: constant symbol");
  if (deg % 2 != 0) throw UnboundedSymbol("leading degree is odd; operator unbounded below");
  PolySymbol lead = sym.xp_homogeneous_part(deg);
  double lead_min = std::numeric_limits<double>::infinity(), lead_max = 0.0;
  for (int s = 0; s < 64; ++s) {
    const double th = 2.0 * M_PI * s / 64.0;
    const double v = lead.eval(std::cos(th), std::sin(th), hbar).real();
    lead_min = std::min(lead_min, v);
    lead_max = std::max(lead_max, std::abs(v));
  }
  if (lead_min < -1e-9 * lead_max)
    throw UnboundedSymbol("leading form takes negative values");
  // degenerate leading directions are fine as long as the full symbol still
  // grows there (kinetic-plus-potential shapes); probe two radii per ray
  std::vector<double> v1(64), v2(64);
  double scale = 0.0;
  for (int s = 0; s < 64; ++s) {
    const double th = 2.0 * M_PI * s / 64.0;
    v1[s] = sym.eval(8.0 * std::cos(th), 8.0 * std::sin(th), hbar).real();
    v2[s] = sym.eval(16.0 * std::cos(th), 16.0 * std::sin(th), hbar).real();
    scale = std::max(scale, std::abs(v2[s]));
  }
  for (int s = 0; s < 64; ++s) {
    if (!(v2[s] > v1[s] + 1e-12 * scale && v2[s] > 1e-12 * scale))
      throw UnboundedSymbol("symbol does not grow along all phase-space rays");
  }

  OracleSpectrum out;
  out.method = "fock";
  out.hbar = hbar;
  int nn = std::max(n, static_cast<int>(std::ceil((k + 4) / 0.8)));
  std::vector<double> prev = fock_levels(sym, hbar, nn, k);
  for (int doubling = 0; doubling < 4; ++doubling) {
    nn *= 2;
    std::vector<double> cur = fock_levels(sym, hbar, nn, k);
    std::vector<double> conv(k);
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      conv[i] = std::abs(cur[i] - prev[i]);
      worst = std::max(worst, conv[i]);
    }
    if (worst < tol) {
      out.eigenvalues = cur;
      out.convergence = conv;
      out.resolution = nn;
      return out;
    }
    prev = std::move(cur);
  }
  throw OracleDiverged("fock oracle: levels did not stabilize after 4 doublings");
}

}  // namespace starspec

#endif  // STARSPEC_ORACLE_HPP
