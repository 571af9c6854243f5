#include "plab/krein.hpp"

#include <algorithm>

namespace plab {

namespace {

// Drops zero-width intervals (exact eigenvalue ties), merges equal neighbours
// and strips zero-valued ends.
SpectralShiftFunction canonical(const std::vector<double>& breaks, const std::vector<int>& values) {
  std::vector<double> b;
  std::vector<int> v;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double l = breaks[k], r = breaks[k + 1];
    if (!(r > l)) continue;
    if (!v.empty() && v.back() == values[k]) {
      b.back() = r;
    } else {
      if (b.empty()) b.push_back(l);
      b.push_back(r);
      v.push_back(values[k]);
    }
  }
  std::size_t first = 0;
  while (first < v.size() && v[first] == 0) ++first;
  std::size_t last = v.size();
  while (last > first && v[last - 1] == 0) --last;
  if (first == last) return {};
  return SpectralShiftFunction(std::vector<double>(b.begin() + static_cast<long>(first), b.begin() + static_cast<long>(last) + 1),
                               std::vector<int>(v.begin() + static_cast<long>(first), v.begin() + static_cast<long>(last)));
}

}  // namespace

SpectralShiftFunction::SpectralShiftFunction(std::vector<double> breakpoints, std::vector<int> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (!breakpoints_.empty() && values_.size() + 1 != breakpoints_.size())
    throw ValidationError("spectral shift function needs one value per interval");
  if (breakpoints_.empty() && !values_.empty())
    throw ValidationError("spectral shift function values without breakpoints");
  if (!std::is_sorted(breakpoints_.begin(), breakpoints_.end()))
    throw ValidationError("spectral shift breakpoints must be sorted");
}

int SpectralShiftFunction::operator()(double lambda) const {
  const auto idx = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), lambda) - breakpoints_.begin();
  if (idx == 0 || idx >= static_cast<long>(breakpoints_.size())) return 0;
  return values_[static_cast<std::size_t>(idx - 1)];
}

double SpectralShiftFunction::integral() const {
  double s = 0;
  for (std::size_t k = 0; k < values_.size(); ++k) s += values_[k] * (breakpoints_[k + 1] - breakpoints_[k]);
  return s;
}

double SpectralShiftFunction::abs_integral() const {
  double s = 0;
  for (std::size_t k = 0; k < values_.size(); ++k)
    s += std::abs(values_[k]) * (breakpoints_[k + 1] - breakpoints_[k]);
  return s;
}

int SpectralShiftFunction::min_value() const {
  return values_.empty() ? 0 : std::min(0, *std::min_element(values_.begin(), values_.end()));
}

int SpectralShiftFunction::max_value() const {
  return values_.empty() ? 0 : std::max(0, *std::max_element(values_.begin(), values_.end()));
}

double SpectralShiftFunction::pair_with(const std::function<double(double)>& phi, double lo, double hi) const {
  double s = 0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (values_[k] == 0) continue;
    const double l = std::max(lo, breakpoints_[k]);
    const double r = std::min(hi, breakpoints_[k + 1]);
    if (r <= l) continue;
    s += values_[k] * (phi(r) - phi(l));
  }
  return s;
}

double SpectralShiftFunction::pair_with(const PolyFunction& phi, double lo, double hi) const {
  if (!phi.is_real()) throw ValidationError("pair_with needs a real polynomial");
  return pair_with([&phi](double x) { return phi.real_at(x); }, lo, hi);
}

double SpectralShiftFunction::integral_over(double lo, double hi) const {
  return pair_with([](double x) { return x; }, lo, hi);
}

SpectralShiftFunction SpectralShiftFunction::negated() const {
  std::vector<int> v(values_);
  for (auto& x : v) x = -x;
  return SpectralShiftFunction(breakpoints_, std::move(v));
}

SpectralShiftFunction SpectralShiftFunction::reflected() const {
  std::vector<double> b(breakpoints_.rbegin(), breakpoints_.rend());
  for (auto& x : b) x = -x;
  return SpectralShiftFunction(std::move(b), std::vector<int>(values_.rbegin(), values_.rend()));
}

PerturbationPair::PerturbationPair(HermitianOperator unperturbed, HermitianOperator perturbed)
    : h0(std::move(unperturbed)), h(std::move(perturbed)) {
  if (h0.dim() != h.dim()) throw DimensionMismatch("perturbation pair: H0 and H differ in dimension");
}

SpectralShiftFunction spectral_shift(const RVector<double>& eig_h0, const RVector<double>& eig_h) {
  if (eig_h0.size() != eig_h.size()) throw DimensionMismatch("spectral_shift: dimension mismatch");
  const Eigen::Index n = eig_h0.size();
  std::vector<double> breaks;
  std::vector<int> values;
  breaks.reserve(static_cast<std::size_t>(2 * n));
  values.reserve(static_cast<std::size_t>(2 * n));
  Eigen::Index i = 0, j = 0;
  int level = 0;
  while (i < n || j < n) {
    // Ties resolved with the H0 eigenvalue first.
    if (j >= n || (i < n && eig_h0(i) <= eig_h(j))) {
      breaks.push_back(eig_h0(i++));
      ++level;
    } else {
      breaks.push_back(eig_h(j++));
      --level;
    }
    values.push_back(level);
  }
  values.pop_back();  // level is zero beyond the last breakpoint
  return canonical(breaks, values);
}

SpectralShiftFunction spectral_shift(const PerturbationPair& pair) {
  return spectral_shift(eigvalsh(pair.h0), eigvalsh(pair.h));
}

KreinCheck krein_check(const PerturbationPair& pair, const PolyFunction& phi) {
  if (!phi.is_real()) throw ValidationError("krein_check needs a real polynomial");
  const auto e0 = eigvalsh(pair.h0);
  const auto e1 = eigvalsh(pair.h);
  KreinCheck out;
  double s = 0;
  for (Eigen::Index k = 0; k < e1.size(); ++k) s += phi.real_at(e1(k)) - phi.real_at(e0(k));
  out.lhs = s;
  out.rhs = spectral_shift(e0, e1).pair_with(phi);
  return out;
}

std::pair<double, double> interior_window(const HyponormalModel& model, double fraction) {
  const double delta = fraction * (model.b - model.a);
  return {model.a + delta, model.b - delta};
}

HermitianOperator compress(const HermitianOperator& h, int n) {
  if (n < 0 || n > h.dim()) throw ValidationError("compression dimension " + std::to_string(n) + " outside [0, " +
                                                  std::to_string(h.dim()) + "]");
  if (n == 0 || n == h.dim()) return h;
  return HermitianOperator(ComplexMatrix(h.matrix().topLeftCorner(n, n)));
}

SsfSlice xi_slice(const HyponormalModel& model, const HermitianOperator& x, const SpectralDecomposition& yd,
                  const RVector<double>& x_spectrum, const std::function<double(double)>& psi, int compression) {
  const HermitianOperator h = compress(unitary_conjugate(x, psi, yd), compression);
  if (x_spectrum.size() != h.dim()) throw DimensionMismatch("xi_slice: spectrum of X does not match the compression");
  SsfSlice out;
  out.shift = spectral_shift(eigvalsh(h), x_spectrum);
  out.total_integral = out.shift.integral();
  std::tie(out.window_lo, out.window_hi) = interior_window(model);
  out.compressed_dim = compression;
  return out;
}

SsfSlice xi_slice(const HyponormalModel& model, const std::function<double(double)>& psi, int compression) {
  const HermitianOperator x = model.X();
  return xi_slice(model, x, eigh(model.Y()), eigvalsh(compress(x, compression)), psi, compression);
}

SsfSlice xi_slice(const HyponormalModel& model, const PolyFunction& psi, int compression) {
  if (!psi.is_real()) throw ValidationError("xi_slice needs a real polynomial");
  return xi_slice(model, [&psi](double t) { return psi.real_at(t); }, compression);
}

SsfSlice eta_slice(const HyponormalModel& model, const std::function<double(double)>& phi, int compression) {
  const HermitianOperator y = model.Y();
  const HermitianOperator h = compress(unitary_conjugate(y, phi, eigh(model.X())), compression);
  SsfSlice out;
  out.shift = spectral_shift(eigvalsh(compress(y, compression)), eigvalsh(h));
  out.total_integral = out.shift.integral();
  std::tie(out.window_lo, out.window_hi) = interior_window(model);
  out.compressed_dim = compression;
  return out;
}

SsfSlice eta_slice(const HyponormalModel& model, const PolyFunction& phi, int compression) {
  if (!phi.is_real()) throw ValidationError("eta_slice needs a real polynomial");
  return eta_slice(model, [&phi](double t) { return phi.real_at(t); }, compression);
}

}  // namespace plab
