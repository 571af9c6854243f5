#include "plab/principal.hpp"

#include <cmath>
#include <sstream>

#include "plab/parallel.hpp"

namespace plab {

namespace {

const std::complex<double> kMinusI(0.0, -1.0);

// Corner traces of degree-d expressions are exact when the window clears the
// polynomial spread on both sides: N > d + margin and the gap to the edge window too.
void require_window(const HyponormalModel& model, int degree, int margin, const char* what) {
  const int n = model.N();
  if (n <= degree + margin || model.edge_begin - n <= degree + margin) {
    std::ostringstream os;
    os << what << ": corner window N=" << n << " (M=" << model.M() << ") too small for degree " << degree
       << "; need N > " << degree + margin << " and a gap of more than " << degree + margin
       << " indices before the truncation edge (have " << model.edge_begin - n << ")";
    throw WindowTooSmall(os.str());
  }
}

SparseOperator poly_of(const SparseOperator& band, const PolyFunction& p) {
  SparseOperator out = polynomial_of(band, p);
  out.prune(std::complex<double>(0.0), 0.0);
  return out;
}

PolyFunction on_model(const PolyFunction& p, const HyponormalModel& model) {
  return p.with_interval(model.a, model.b);
}

}  // namespace

TracePair lemma1_check(const HyponormalModel& model, const PolyFunction& psi, Axis axis) {
  require_window(model, psi.degree(), 2, "lemma1_check");
  const PolyFunction dpsi = derivative(psi);
  TracePair out;
  if (axis == Axis::y) {
    const SparseOperator k = commutator(poly_of(model.y_band, psi), model.x_band);
    out.lhs = kMinusI * corner_trace(k, model.N());
    out.rhs = trace(SparseOperator(poly_of(model.y_band, dpsi) * model.d2_analytic));
  } else {
    const SparseOperator k = commutator(model.y_band, poly_of(model.x_band, psi));
    out.lhs = kMinusI * corner_trace(k, model.N());
    out.rhs = trace(SparseOperator(poly_of(model.x_band, dpsi) * model.d2_analytic));
  }
  return out;
}

SparseOperator separable_operator(const HyponormalModel& model, const SeparableBivariate& f) {
  SparseOperator out(model.M(), model.M());
  for (const auto& term : f.terms()) {
    const SparseOperator a = poly_of(model.x_band, term.alpha);
    const SparseOperator p = poly_of(model.y_band, term.psi);
    out += SparseOperator(a * p) * term.coefficient;
  }
  out.prune(std::complex<double>(0.0), 0.0);
  return out;
}

double moment(const HyponormalModel& model, int p, int q) {
  if (p < 0 || q < 0) throw ValidationError("moment orders must be non-negative");
  require_window(model, p + q, 3, "moment");
  const SparseOperator yq = poly_of(model.y_band, PolyFunction::monomial(q + 1));
  const SparseOperator xp = poly_of(model.x_band, PolyFunction::monomial(p + 1));
  const std::complex<double> value = kMinusI * corner_trace(commutator(yq, xp), model.N()) /
                                     static_cast<double>((p + 1) * (q + 1));
  if (std::abs(value.imag()) > 1e-10) {
    std::ostringstream os;
    os << "moment (" << p << "," << q << ") has imaginary residue " << value.imag();
    throw InvariantViolation("moment_real", os.str());
  }
  return value.real();
}

double MomentTable::at(int p, int q) const {
  const auto it = entries.find({p, q});
  if (it == entries.end()) {
    std::ostringstream os;
    os << "moment table has no entry (" << p << "," << q << ")";
    throw ValidationError(os.str());
  }
  return it->second;
}

namespace {

std::vector<std::pair<int, int>> moment_indices(int max_degree) {
  std::vector<std::pair<int, int>> idx;
  for (int total = 0; total <= max_degree; ++total)
    for (int p = total; p >= 0; --p) idx.emplace_back(p, total - p);
  return idx;
}

template <typename F>
MomentTable assemble_table(const HyponormalModel& model, int max_degree, F&& entry) {
  if (max_degree < 0) throw ValidationError("moment table degree must be non-negative");
  const auto idx = moment_indices(max_degree);
  const auto values = parallel_map(idx.size(), [&](std::size_t k) { return entry(idx[k].first, idx[k].second); });
  MomentTable table;
  table.max_degree = max_degree;
  table.model_id = model.spec.id();
  table.a = model.a;
  table.b = model.b;
  for (std::size_t k = 0; k < idx.size(); ++k) table.entries[idx[k]] = values[k];
  return table;
}

}  // namespace

MomentTable moment_table(const HyponormalModel& model, int max_degree) {
  require_window(model, max_degree, 3, "moment_table");
  return assemble_table(model, max_degree, [&](int p, int q) { return moment(model, p, q); });
}

MomentTable closed_form_moment_table(const HyponormalModel& model, int max_degree) {
  return assemble_table(model, max_degree, [&](int p, int q) { return closed_form_moment(model, p, q); });
}

std::complex<double> generalized_trace_lhs(const HyponormalModel& model, const SeparableBivariate& psi,
                                           const SeparableBivariate& phi) {
  require_window(model, psi.joint_degree() + phi.joint_degree(), 3, "generalized_trace_lhs");
  const SparseOperator a = separable_operator(model, psi);
  const SparseOperator b = separable_operator(model, phi);
  return kMinusI * corner_trace(commutator(a, b), model.N());
}

std::complex<double> generalized_trace_rhs(const SeparableBivariate& psi, const SeparableBivariate& phi,
                                           const DensitySource& r, int grid_size) {
  // Regrouped by monomials so that cancelling terms (e.g. J(Psi, Psi)) contribute exactly zero.
  const SeparableBivariate integrand = collapse_terms(-jacobian(psi, phi));
  if (integrand.empty()) return 0.0;
  if (const auto* estimate = std::get_if<PrincipalFunctionEstimate>(&r))
    return integrate_bivariate(integrand, *estimate);
  const auto& density = std::get<DensityFunction>(r);
  return integrate_bivariate(integrand, sample_density(density, integrand.lower(), integrand.upper(), grid_size));
}

std::complex<double> generalized_trace_rhs_exact(const HyponormalModel& model, const SeparableBivariate& psi,
                                                 const SeparableBivariate& phi) {
  const Eigen::MatrixXcd grid = coefficient_grid(-jacobian(psi, phi));
  std::complex<double> total = 0.0;
  for (Eigen::Index p = 0; p < grid.rows(); ++p)
    for (Eigen::Index q = 0; q < grid.cols(); ++q)
      if (grid(p, q) != 0.0) total += grid(p, q) * closed_form_moment(model, static_cast<int>(p), static_cast<int>(q));
  return total;
}

CollapseCheck collapse_check(const HyponormalModel& model, const PolyFunction& alpha, const PolyFunction& psi,
                             const PolyFunction& phi, const PolyFunction& beta) {
  const PolyFunction al = on_model(alpha, model), ps = on_model(psi, model);
  const PolyFunction ph = on_model(phi, model), be = on_model(beta, model);
  CollapseCheck out;

  const SparseOperator a = SparseOperator(poly_of(model.x_band, al) * poly_of(model.y_band, ps));
  const SparseOperator k = commutator(poly_of(model.x_band, ph), poly_of(model.y_band, be));
  out.full_trace_residual = std::abs(trace(commutator(a, k)));

  using S = SeparableBivariate;
  out.lhs_direct = generalized_trace_lhs(model, S::single(1.0, al, ps), S::single(1.0, ph, be));
  out.lhs_split = generalized_trace_lhs(model, S::single(1.0, al, ps * be), S::in_t(ph)) +
                  generalized_trace_lhs(model, S::single(1.0, al * ph, ps), S::in_lambda(be));
  return out;
}

namespace {

// Monomial coefficients (in t) of P_i((2t - (a+b)) / (b-a)), i = 0..degree.
std::vector<std::vector<double>> shifted_legendre(int degree, double a, double b) {
  const double s = 2.0 / (b - a), o = -(a + b) / (b - a);
  std::vector<std::vector<double>> out;
  std::vector<double> prev{1.0};
  std::vector<double> cur{o, s};
  out.push_back(prev);
  if (degree >= 1) out.push_back(cur);
  for (int n = 1; n < degree; ++n) {
    // (n+1) P_{n+1} = (2n+1) u P_n - n P_{n-1},  u = s t + o
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      next[k] += (2 * n + 1) * o * cur[k];
      next[k + 1] += (2 * n + 1) * s * cur[k];
    }
    for (std::size_t k = 0; k < prev.size(); ++k) next[k] -= n * prev[k];
    for (auto& v : next) v /= (n + 1);
    prev = std::move(cur);
    cur = std::move(next);
    out.push_back(cur);
  }
  return out;
}

double legendre_value(int n, double u) {
  double p0 = 1.0, p1 = u;
  if (n == 0) return p0;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2 * k + 1) * u * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

Eigen::MatrixXd legendre_projection(const MomentTable& moments, int degree) {
  if (degree < 0) throw ValidationError("reconstruction degree must be non-negative");
  for (int p = 0; p <= degree; ++p)
    for (int q = 0; q <= degree; ++q)
      if (!moments.has(p, q)) {
        std::ostringstream os;
        os << "incomplete moment table: missing (" << p << "," << q << ") for degree " << degree;
        throw ValidationError(os.str());
      }
  const double a = moments.a, b = moments.b;
  const auto leg = shifted_legendre(degree, a, b);

  // c_ij = (2i+1)(2j+1)/(b-a)^2 * integral of P_i P_j r.
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; j <= degree; ++j) {
      double m = 0.0;
      for (std::size_t p = 0; p < leg[static_cast<std::size_t>(i)].size(); ++p)
        for (std::size_t q = 0; q < leg[static_cast<std::size_t>(j)].size(); ++q)
          m += leg[static_cast<std::size_t>(i)][p] * leg[static_cast<std::size_t>(j)][q] *
               moments.at(static_cast<int>(p), static_cast<int>(q));
      coeff(i, j) = m * (2 * i + 1) * (2 * j + 1) / ((b - a) * (b - a));
    }
  return coeff;
}

double reconstruct_at(const MomentTable& moments, int degree, double t, double lambda) {
  const Eigen::MatrixXd coeff = legendre_projection(moments, degree);
  const double a = moments.a, b = moments.b;
  const double u = (2.0 * t - (a + b)) / (b - a), v = (2.0 * lambda - (a + b)) / (b - a);
  double s = 0.0;
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; j <= degree; ++j) s += coeff(i, j) * legendre_value(i, u) * legendre_value(j, v);
  return s;
}

PrincipalFunctionEstimate reconstruct_r(const MomentTable& moments, int degree, int grid_size) {
  if (grid_size < 1) throw ValidationError("reconstruction grid must have at least one node");
  const Eigen::MatrixXd coeff = legendre_projection(moments, degree);
  const double a = moments.a, b = moments.b;

  PrincipalFunctionEstimate out;
  out.a = a;
  out.b = b;
  out.basis_degree = degree;
  out.t_grid = gauss_legendre(grid_size, a, b);
  out.lambda_grid = out.t_grid;
  Eigen::MatrixXd basis(grid_size, degree + 1);  // basis(k, i) = P_i(u_k)
  for (int k = 0; k < grid_size; ++k) {
    const double u = (2.0 * out.t_grid.nodes(k) - (a + b)) / (b - a);
    for (int i = 0; i <= degree; ++i) basis(k, i) = legendre_value(i, u);
  }
  out.values = basis * coeff * basis.transpose();
  refresh_l1_mass(out);
  return out;
}

BinnedEstimate ssf_binned_r(const HyponormalModel& model, const std::vector<double>& t_edges,
                            const std::vector<double>& lambda_edges, std::pair<double, double> window,
                            int ramp_degree, int compression) {
  auto check_edges = [&](const std::vector<double>& e, const char* name) {
    const double tol = 1e-12 * (model.b - model.a);
    if (e.size() < 2 || std::abs(e.front() - model.a) > tol || std::abs(e.back() - model.b) > tol)
      throw ValidationError(std::string("ssf_binned_r: ") + name + " bins must partition [a,b]");
    for (std::size_t k = 1; k < e.size(); ++k)
      if (!(e[k] > e[k - 1])) throw ValidationError(std::string("ssf_binned_r: degenerate ") + name + " bin");
  };
  check_edges(t_edges, "t");
  check_edges(lambda_edges, "lambda");

  const HermitianOperator x = model.X();
  const SpectralDecomposition yd = eigh(model.Y());
  const RVector<double> xs = eigvalsh(compress(x, compression));

  const std::size_t nt = t_edges.size() - 1, nl = lambda_edges.size() - 1;
  const auto slices = parallel_map(nl, [&](std::size_t j) {
    const auto ramp = indicator_ramp(lambda_edges[j], lambda_edges[j + 1], model.a, model.b, ramp_degree);
    return xi_slice(model, x, yd, xs, [&ramp](double l) { return ramp(l); }, compression);
  });

  BinnedEstimate out;
  auto& est = out.estimate;
  est.a = model.a;
  est.b = model.b;
  est.t_grid.nodes.resize(static_cast<Eigen::Index>(nt));
  est.t_grid.weights.resize(static_cast<Eigen::Index>(nt));
  est.lambda_grid.nodes.resize(static_cast<Eigen::Index>(nl));
  est.lambda_grid.weights.resize(static_cast<Eigen::Index>(nl));
  for (std::size_t i = 0; i < nt; ++i) {
    est.t_grid.nodes(static_cast<Eigen::Index>(i)) = 0.5 * (t_edges[i] + t_edges[i + 1]);
    est.t_grid.weights(static_cast<Eigen::Index>(i)) = t_edges[i + 1] - t_edges[i];
  }
  for (std::size_t j = 0; j < nl; ++j) {
    est.lambda_grid.nodes(static_cast<Eigen::Index>(j)) = 0.5 * (lambda_edges[j] + lambda_edges[j + 1]);
    est.lambda_grid.weights(static_cast<Eigen::Index>(j)) = lambda_edges[j + 1] - lambda_edges[j];
  }
  est.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nl));
  for (std::size_t j = 0; j < nl; ++j) {
    const auto& xi = slices[j].shift;
    out.null_sums.push_back(slices[j].total_integral);
    const double width_l = lambda_edges[j + 1] - lambda_edges[j];
    for (std::size_t i = 0; i < nt; ++i) {
      const double lo = std::max(t_edges[i], window.first);
      const double hi = std::min(t_edges[i + 1], window.second);
      if (hi <= lo) continue;  // bin outside the interior window
      est.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          xi.integral_over(lo, hi) / ((hi - lo) * width_l);
    }
  }
  refresh_l1_mass(est);
  return out;
}

double positivity_probe(const HyponormalModel& model, const PolyFunction& psi) {
  require_window(model, psi.degree(), 2, "positivity_probe");
  const SparseOperator k =
      SparseOperator(commutator(poly_of(model.y_band, psi), model.x_band) * kMinusI);
  const ComplexMatrix corner = ComplexMatrix(k.topLeftCorner(model.N(), model.N()));
  const ComplexMatrix herm = (corner + corner.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace plab
