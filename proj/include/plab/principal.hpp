#pragma once

// Trace defects of commutators on truncated hyponormal models, commutator
// moments, principal-function reconstruction, and both sides of the
// bivariate trace formula  Tr{-i[Psi(X,Y), Phi(X,Y)]} = integral of -J(Psi,Phi) r.

#include <complex>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "plab/density.hpp"
#include "plab/krein.hpp"
#include "plab/models.hpp"

namespace plab {

// Which self-adjoint part carries the function in the single-commutator identities:
// y: -i Tr[psi(Y), X] = Tr psi'(Y) D^2;  x: -i Tr[Y, psi(X)] = Tr psi'(X) D^2.
enum class Axis { y, x };

struct TracePair {
  std::complex<double> lhs;
  std::complex<double> rhs;
  double gap() const { return std::abs(lhs - rhs); }
};

TracePair lemma1_check(const HyponormalModel& model, const PolyFunction& psi, Axis axis = Axis::y);

// Sum_j c_j alpha_j(X) psi_j(Y) with the X factor on the left.
SparseOperator separable_operator(const HyponormalModel& model, const SeparableBivariate& f);

// mu_pq = corner trace of -i[Y^{q+1}, X^{p+1}] / ((p+1)(q+1)).
double moment(const HyponormalModel& model, int p, int q);

struct MomentTable {
  std::map<std::pair<int, int>, double> entries;
  int max_degree = 0;
  std::string model_id;
  double a = -1.0;
  double b = 1.0;

  double at(int p, int q) const;
  bool has(int p, int q) const { return entries.count({p, q}) != 0; }
};

// All moments with p + q <= max_degree, computed on the worker pool.
MomentTable moment_table(const HyponormalModel& model, int max_degree);
// Same layout from the closed-form region integrals (shift and elliptic only).
MomentTable closed_form_moment_table(const HyponormalModel& model, int max_degree);

std::complex<double> generalized_trace_lhs(const HyponormalModel& model, const SeparableBivariate& psi,
                                           const SeparableBivariate& phi);

using DensitySource = std::variant<DensityFunction, PrincipalFunctionEstimate>;

// Quadrature of -J(Psi, Phi) r over [a,b]^2 (the interval of Psi). A density
// callback is sampled on a grid_size x grid_size Gauss-Legendre grid.
std::complex<double> generalized_trace_rhs(const SeparableBivariate& psi, const SeparableBivariate& phi,
                                           const DensitySource& r, int grid_size = 201);

// -J(Psi, Phi) expanded into monomials and paired with the model's closed-form moments.
std::complex<double> generalized_trace_rhs_exact(const HyponormalModel& model, const SeparableBivariate& psi,
                                                 const SeparableBivariate& phi);

struct CollapseCheck {
  double full_trace_residual = 0;   // |Tr over C^M of A K - K A|, A = alpha(X)psi(Y), K = [phi(X), beta(Y)]
  std::complex<double> lhs_direct;  // -i Tr[alpha psi, phi beta]
  std::complex<double> lhs_split;   // -i Tr[alpha (psi beta), phi] - i Tr[(alpha phi) psi, beta]
  double split_gap() const { return std::abs(lhs_direct - lhs_split); }
};

CollapseCheck collapse_check(const HyponormalModel& model, const PolyFunction& alpha, const PolyFunction& psi,
                             const PolyFunction& phi, const PolyFunction& beta);

// Orthogonal projection of r onto P_i(t) P_j(lambda), i, j <= degree, on [a,b]^2,
// evaluated on a grid_size x grid_size Gauss-Legendre grid. Needs every moment
// with p, q <= degree, so a table through total degree 2 * degree.
PrincipalFunctionEstimate reconstruct_r(const MomentTable& moments, int degree, int grid_size);
// Tensor Legendre coefficients c(i, j) of the same projection.
Eigen::MatrixXd legendre_projection(const MomentTable& moments, int degree);
// The projection evaluated at a single point.
double reconstruct_at(const MomentTable& moments, int degree, double t, double lambda);

struct BinnedEstimate {
  PrincipalFunctionEstimate estimate;  // nodes at bin centres, weights are bin widths
  std::vector<double> null_sums;       // integral of xi(t; Delta_j) per lambda bin; zero uncompressed
};

// Experimental: r on bin (Omega, Delta) from the windowed integral of xi(t; Delta)
// over Omega, with psi the Chebyshev-smoothed ramp of the indicator of Delta.
// compression as in xi_slice; without it every slice vanishes.
BinnedEstimate ssf_binned_r(const HyponormalModel& model, const std::vector<double>& t_edges,
                            const std::vector<double>& lambda_edges, std::pair<double, double> window,
                            int ramp_degree = 64, int compression = 0);

// Smallest eigenvalue of the N x N corner block of -i[psi(Y), X].
double positivity_probe(const HyponormalModel& model, const PolyFunction& psi);

}  // namespace plab
