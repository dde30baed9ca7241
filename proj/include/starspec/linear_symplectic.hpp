#ifndef STARSPEC_LINEAR_SYMPLECTIC_HPP
#define STARSPEC_LINEAR_SYMPLECTIC_HPP

#include <cmath>

#include "starspec/errors.hpp"
#include "starspec/smooth_hamiltonian.hpp"

namespace starspec {

/// 2x2 real matrix acting on phase space, z -> S z.  Symplectic in one
/// degree of freedom means det S = 1.
struct LinearSymplectic {
  double xx = 1.0, xp = 0.0;
  double px = 0.0, pp = 1.0;

  static LinearSymplectic identity() { return {}; }

  double det() const { return xx * pp - xp * px; }

  Vec2 apply(Vec2 z) const { return {xx * z.x + xp * z.p, px * z.x + pp * z.p}; }

  /// Inverse assuming det = 1.
  LinearSymplectic inverse() const { return {pp, -xp, -px, xx}; }

  void require_symplectic(double tol = 1e-12) const {
    if (std::abs(det() - 1.0) > tol)
      throw NotSymplectic("matrix determinant " + std::to_string(det()) + " is not 1");
  }
};

}  // namespace starspec

#endif  // STARSPEC_LINEAR_SYMPLECTIC_HPP
