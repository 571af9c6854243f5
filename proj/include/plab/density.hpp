#pragma once

// Gridded densities on [a,b]^2 and tensor-product quadrature against them.

#include <complex>

#include "plab/models.hpp"
#include "plab/poly.hpp"
#include "plab/quadrature.hpp"

namespace plab {

struct PrincipalFunctionEstimate {
  double a = -1.0;
  double b = 1.0;
  QuadratureRule t_grid;       // nodes and weights in t
  QuadratureRule lambda_grid;  // nodes and weights in lambda
  Eigen::MatrixXd values;      // values(i, j) = r(t_i, lambda_j)
  int basis_degree = 0;
  double l1_mass = 0.0;

  double integral() const;
  // Quadrature of t^p lambda^q r.
  double moment(int p, int q) const;
  double min_value() const { return values.minCoeff(); }
};

// Samples r on an n x n Gauss-Legendre grid over [a,b]^2.
PrincipalFunctionEstimate sample_density(const DensityFunction& r, double a, double b, int n);

// Recomputes l1_mass from the values and grid weights.
void refresh_l1_mass(PrincipalFunctionEstimate& estimate);

// Tensor quadrature of f * r over the estimate's grid. The function's interval
// must match the estimate's.
std::complex<double> integrate_bivariate(const SeparableBivariate& f, const PrincipalFunctionEstimate& r);

}  // namespace plab
