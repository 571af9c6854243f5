#include "plab/models.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace plab {

namespace {

using Triplet = Eigen::Triplet<std::complex<double>>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const std::complex<double> kI(0.0, 1.0);

SparseOperator from_triplets(int n, const std::vector<Triplet>& entries) {
  SparseOperator m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

// Integral of u^m v^n over the unit disc.
double disc_monomial(int m, int n) {
  if (m % 2 != 0 || n % 2 != 0) return 0.0;
  const double am = 0.5 * (m + 1), an = 0.5 * (n + 1);
  return 2.0 * std::tgamma(am) * std::tgamma(an) / ((m + n + 2) * std::tgamma(am + an));
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// (1/2pi) * integral of t^p lambda^q over the ellipse with semiaxes (sa, sb) rotated by rot.
double ellipse_moment(double sa, double sb, double rot, int p, int q) {
  const double ca = sa * std::cos(rot), cb = -sb * std::sin(rot);
  const double la = sa * std::sin(rot), lb = sb * std::cos(rot);
  double s = 0.0;
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= q; ++j)
      s += binomial(p, i) * std::pow(ca, i) * std::pow(cb, p - i) * binomial(q, j) * std::pow(la, j) *
           std::pow(lb, q - j) * disc_monomial(i + j, p - i + q - j);
  return s * sa * sb / kTwoPi;
}

// Shortest text that round-trips to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::shift: return "shift";
    case ModelKind::elliptic: return "elliptic";
    case ModelKind::q_weighted: return "qweighted";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "shift") return ModelKind::shift;
  if (name == "elliptic") return ModelKind::elliptic;
  if (name == "qweighted" || name == "q_weighted") return ModelKind::q_weighted;
  throw ValidationError("unknown model kind '" + name + "' (expected shift|elliptic|qweighted)");
}

void ModelSpec::validate() const {
  std::ostringstream os;
  if (ambient_dim < 2) os << "ambient_dim M must be >= 2, got " << ambient_dim;
  else if (corner_dim < 1) os << "corner_dim N must be >= 1, got " << corner_dim;
  else if (2 * corner_dim > ambient_dim)
    os << "corner_dim N=" << corner_dim << " must satisfy N <= M/2 (M=" << ambient_dim << ")";
  else if (kind == ModelKind::elliptic && !(c >= 0.0 && c < 1.0))
    os << "elliptic parameter c must lie in [0,1), got " << c;
  else if (kind == ModelKind::elliptic && !std::isfinite(phase))
    os << "elliptic phase must be finite";
  else if (kind == ModelKind::q_weighted && !(q > 0.0 && q < 1.0))
    os << "q_weighted parameter q must lie in (0,1), got " << q;
  if (!os.str().empty()) throw ValidationError(os.str());
}

std::string ModelSpec::id() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == ModelKind::elliptic) os << "(c=" << shortest(c) << ",phase=" << shortest(phase) << ")";
  if (kind == ModelKind::q_weighted) os << "(q=" << shortest(q) << ")";
  os << "[M=" << ambient_dim << ",N=" << corner_dim << "]";
  return os.str();
}

HermitianOperator HyponormalModel::X() const { return HermitianOperator(ComplexMatrix(x_band)); }
HermitianOperator HyponormalModel::Y() const { return HermitianOperator(ComplexMatrix(y_band)); }

std::complex<double> HyponormalModel::symbol(double theta) const {
  if (!has_symbol()) throw UnsupportedModel("model " + spec.id() + " has no Toeplitz symbol");
  const double c = spec.kind == ModelKind::elliptic ? spec.c : 0.0;
  std::complex<double> f = std::polar(1.0, theta) + c * std::polar(1.0, spec.phase - theta);
  for (int k = 0; k < quarter_turns % 4; ++k) f *= kI;
  return f;
}

HyponormalModel build(const ModelSpec& spec) {
  spec.validate();
  const int m = spec.ambient_dim;
  HyponormalModel model;
  model.spec = spec;

  std::vector<Triplet> t_entries;
  std::vector<Triplet> d2_entries;
  switch (spec.kind) {
    case ModelKind::shift:
      for (int j = 0; j + 1 < m; ++j) t_entries.emplace_back(j + 1, j, 1.0);
      d2_entries.emplace_back(0, 0, 0.5);
      model.a = -1.0;
      model.b = 1.0;
      model.trD2 = 0.5;
      model.expected_r = [](double t, double l) { return t * t + l * l < 1.0 ? 1.0 / kTwoPi : 0.0; };
      break;
    case ModelKind::elliptic: {
      const std::complex<double> w = spec.c * std::polar(1.0, spec.phase);
      for (int j = 0; j + 1 < m; ++j) {
        t_entries.emplace_back(j + 1, j, 1.0);
        if (w != 0.0) t_entries.emplace_back(j, j + 1, w);
      }
      const double half_defect = 0.5 * (1.0 - spec.c * spec.c);
      d2_entries.emplace_back(0, 0, half_defect);
      model.a = -(1.0 + spec.c);
      model.b = 1.0 + spec.c;
      model.trD2 = half_defect;
      const double sa = 1.0 + spec.c, sb = 1.0 - spec.c, rot = 0.5 * spec.phase;
      const double cr = std::cos(rot), sr = std::sin(rot);
      model.expected_r = [sa, sb, cr, sr](double t, double l) {
        const double u = (t * cr + l * sr) / sa;
        const double v = (-t * sr + l * cr) / sb;
        return u * u + v * v < 1.0 ? 1.0 / kTwoPi : 0.0;
      };
      break;
    }
    case ModelKind::q_weighted: {
      double qp = spec.q;  // q^{j+1}
      for (int j = 0; j + 1 < m; ++j) {
        t_entries.emplace_back(j + 1, j, std::sqrt(1.0 - qp));
        qp *= spec.q;
      }
      double qj = 1.0;
      for (int j = 0; j < m; ++j) {
        d2_entries.emplace_back(j, j, 0.5 * qj * (1.0 - spec.q));
        qj *= spec.q;
      }
      model.a = -1.0;
      model.b = 1.0;
      model.trD2 = 0.5;
      break;
    }
  }

  const SparseOperator t = from_triplets(m, t_entries);
  const SparseOperator t_adj = SparseOperator(t.adjoint());
  model.x_band = SparseOperator((t + t_adj) * std::complex<double>(0.5, 0.0));
  model.y_band = SparseOperator((t - t_adj) * std::complex<double>(0.0, -0.5));
  model.d2_analytic = from_triplets(m, d2_entries);
  model.edge_begin = m - (m + 7) / 8;
  return model;
}

HyponormalModel rotated_quarter_turn(const HyponormalModel& model) {
  HyponormalModel out = model;
  out.x_band = SparseOperator(-model.y_band);
  out.y_band = model.x_band;
  out.quarter_turns = (model.quarter_turns + 1) % 4;
  // i(t + i lambda) = -lambda + i t; the image point (t', l') comes from (l', -t').
  if (model.expected_r) {
    auto r = *model.expected_r;
    out.expected_r = [r](double t, double l) { return r(l, -t); };
  }
  return out;
}

double winding_r(const HyponormalModel& model, double t, double lambda, int nodes) {
  const std::complex<double> z(t, lambda);
  double total = 0.0;
  double min_dist = std::numeric_limits<double>::infinity();
  std::complex<double> prev = model.symbol(0.0) - z;
  for (int k = 1; k <= nodes; ++k) {
    const std::complex<double> cur = model.symbol(kTwoPi * k / nodes) - z;
    min_dist = std::min(min_dist, std::abs(cur));
    total += std::arg(cur / prev);
    prev = cur;
  }
  // On the curve (to node resolution) the winding number is undefined; report 0.
  const double resolution = kTwoPi * std::max(std::abs(model.b), 1.0) / nodes;
  if (min_dist < 1e-3 * resolution) return 0.0;
  return std::round(total / kTwoPi) / kTwoPi;
}

double closed_form_moment(const HyponormalModel& model, int p, int q) {
  if (!model.has_symbol())
    throw UnsupportedModel("closed-form moments need a symbol curve; model " + model.spec.id());
  if (p < 0 || q < 0) throw ValidationError("moment orders must be non-negative");
  const double c = model.spec.kind == ModelKind::elliptic ? model.spec.c : 0.0;
  const double phase = model.spec.kind == ModelKind::elliptic ? model.spec.phase : 0.0;
  // Each quarter turn maps the moment (p, q) to (-1)^p (q, p) of the unrotated region.
  double sign = 1.0;
  for (int k = 0; k < model.quarter_turns % 4; ++k) {
    if (p % 2 != 0) sign = -sign;
    std::swap(p, q);
  }
  return sign * ellipse_moment(1.0 + c, 1.0 - c, 0.5 * phase, p, q);
}

RVector<double> tridiagonal_spectrum(const SparseOperator& band) {
  const Eigen::Index n = band.rows();
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index j = 0; j < n; ++j) {
    diag(j) = band.coeff(j, j).real();
    if (j + 1 < n) sub(j) = std::abs(band.coeff(j + 1, j));
  }
  if (n == 1) return diag;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

HyponormalityReport verify_hyponormal(const HyponormalModel& model) {
  HyponormalityReport report;
  const int n = model.N();

  ComplexMatrix corner = ComplexMatrix(model.d2_analytic).topLeftCorner(n, n);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> corner_solver(corner, Eigen::EigenvaluesOnly);
  report.d2_min_eigenvalue = corner_solver.eigenvalues().minCoeff();
  if (report.d2_min_eigenvalue < -1e-12)
    throw InvariantViolation("d2_positive", "corner block of D2 has eigenvalue " +
                                                std::to_string(report.d2_min_eigenvalue));

  const SparseOperator self_commutator =
      SparseOperator(commutator(model.y_band, model.x_band) * std::complex<double>(0.0, -1.0));
  const SparseOperator diff = SparseOperator(self_commutator - model.d2_analytic);
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(diff, k); it; ++it)
      if (it.row() < model.edge_begin && it.col() < model.edge_begin)
        report.corner_mismatch = std::max(report.corner_mismatch, std::abs(it.value()));
  if (report.corner_mismatch > 1e-13)
    throw InvariantViolation("corner_agreement", "-i[Y,X] differs from D2 by " +
                                                     std::to_string(report.corner_mismatch));

  // The q-weighted D^2 is infinite rank; its truncation misses the tail q^M / 2.
  const double tail = model.spec.kind == ModelKind::q_weighted
                          ? 0.5 * std::pow(model.spec.q, model.spec.ambient_dim)
                          : 0.0;
  report.trace_gap = std::abs(trace(model.d2_analytic) - model.trD2);
  if (report.trace_gap > 1e-12 + tail)
    throw InvariantViolation("trace_d2", "trace(D2) differs from trD2 by " + std::to_string(report.trace_gap));

  const auto sx = tridiagonal_spectrum(model.x_band);
  const auto sy = tridiagonal_spectrum(model.y_band);
  report.spectrum_min = std::min(sx.minCoeff(), sy.minCoeff());
  report.spectrum_max = std::max(sx.maxCoeff(), sy.maxCoeff());
  if (report.spectrum_min < model.a - 1e-12 || report.spectrum_max > model.b + 1e-12)
    throw InvariantViolation("spectrum_in_interval", "spectra of X, Y leave [a,b]");
  return report;
}

}  // namespace plab
