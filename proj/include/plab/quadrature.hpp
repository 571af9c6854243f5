#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "plab/errors.hpp"

namespace plab {

template <typename Real>
struct BasicQuadratureRule {
  Eigen::Matrix<Real, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Real, Eigen::Dynamic, 1> weights;
};

using QuadratureRule = BasicQuadratureRule<double>;

// n-point Gauss-Legendre rule mapped to [a,b]; exact for polynomials of degree <= 2n-1.
template <typename Real>
BasicQuadratureRule<Real> gauss_legendre(int n, Real a, Real b) {
  if (n < 1) throw ValidationError("Gauss-Legendre rule needs at least one node");
  BasicQuadratureRule<Real> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Real half = Real(0.5) * (b - a);
  const Real mid = Real(0.5) * (b + a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Real x = std::cos(std::numbers::pi_v<Real> * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
    Real dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Real p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Real pk = ((Real(2 * k - 1)) * x * p1 - Real(k - 1) * p0) / Real(k);
        p0 = p1;
        p1 = pk;
      }
      dp = Real(n) * (x * p1 - p0) / (x * x - Real(1));
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < Real(1e-16)) break;
    }
    // Recompute the derivative at the converged node.
    Real p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Real pk = ((Real(2 * k - 1)) * x * p1 - Real(k - 1) * p0) / Real(k);
      p0 = p1;
      p1 = pk;
    }
    dp = Real(n) * (x * p1 - p0) / (x * x - Real(1));
    const Real w = Real(2) / ((Real(1) - x * x) * dp * dp);
    rule.nodes(i) = mid - half * x;
    rule.nodes(n - 1 - i) = mid + half * x;
    rule.weights(i) = half * w;
    rule.weights(n - 1 - i) = half * w;
  }
  return rule;
}

}  // namespace plab
