#include "plab/density.hpp"

#include <cmath>

namespace plab {

double PrincipalFunctionEstimate::integral() const {
  return t_grid.weights.dot(values * lambda_grid.weights);
}

double PrincipalFunctionEstimate::moment(int p, int q) const {
  const Eigen::VectorXd wt = t_grid.weights.cwiseProduct(t_grid.nodes.array().pow(p).matrix());
  const Eigen::VectorXd wl = lambda_grid.weights.cwiseProduct(lambda_grid.nodes.array().pow(q).matrix());
  return wt.dot(values * wl);
}

void refresh_l1_mass(PrincipalFunctionEstimate& estimate) {
  estimate.l1_mass = estimate.t_grid.weights.dot(estimate.values.cwiseAbs() * estimate.lambda_grid.weights);
}

PrincipalFunctionEstimate sample_density(const DensityFunction& r, double a, double b, int n) {
  PrincipalFunctionEstimate out;
  out.a = a;
  out.b = b;
  out.t_grid = gauss_legendre(n, a, b);
  out.lambda_grid = out.t_grid;
  out.values.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.values(i, j) = r(out.t_grid.nodes(i), out.lambda_grid.nodes(j));
  refresh_l1_mass(out);
  return out;
}

std::complex<double> integrate_bivariate(const SeparableBivariate& f, const PrincipalFunctionEstimate& r) {
  if (f.empty()) return 0.0;
  const double tol = 1e-12 * std::max(1.0, std::abs(r.b - r.a));
  if (std::abs(f.lower() - r.a) > tol || std::abs(f.upper() - r.b) > tol)
    throw ValidationError("integrate_bivariate: function interval does not match the density grid");
  const Eigen::Index nt = r.t_grid.nodes.size();
  const Eigen::Index nl = r.lambda_grid.nodes.size();
  if (r.values.rows() != nt || r.values.cols() != nl)
    throw DimensionMismatch("integrate_bivariate: density values do not match its grid");
  // sum_j c_j (w_t . alpha_j(t)) r (w_l . psi_j(l)) with weighted factor vectors.
  const Eigen::MatrixXcd rv = r.values.cast<std::complex<double>>();
  std::complex<double> total = 0.0;
  for (const auto& term : f.terms()) {
    Eigen::VectorXcd ta(nt), tl(nl);
    for (Eigen::Index i = 0; i < nt; ++i) ta(i) = r.t_grid.weights(i) * term.alpha(r.t_grid.nodes(i));
    for (Eigen::Index j = 0; j < nl; ++j) tl(j) = r.lambda_grid.weights(j) * term.psi(r.lambda_grid.nodes(j));
    total += term.coefficient * (ta.transpose() * (rv * tl)).value();
  }
  return total;
}

}  // namespace plab
