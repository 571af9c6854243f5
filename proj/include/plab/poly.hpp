#pragma once

// Univariate test functions on a compact interval [a,b]: complex-coefficient
// polynomials, trigonometric polynomials, Chebyshev interpolants, and
// separable bivariate sums  sum_j c_j alpha_j(t) psi_j(lambda).

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plab/errors.hpp"

namespace plab {

template <typename Real>
class BasicPoly {
 public:
  using Scalar = std::complex<Real>;

  BasicPoly() = default;

  explicit BasicPoly(std::vector<Scalar> coefficients, Real a = Real(-1), Real b = Real(1))
      : coeffs_(std::move(coefficients)), a_(a), b_(b) {
    if (!(a_ < b_)) {
      std::ostringstream os;
      os << "polynomial interval requires a < b, got [" << a_ << ", " << b_ << "]";
      throw ValidationError(os.str());
    }
    trim();
  }

  static BasicPoly from_real(const std::vector<Real>& coefficients, Real a = Real(-1),
                             Real b = Real(1)) {
    return BasicPoly(std::vector<Scalar>(coefficients.begin(), coefficients.end()), a, b);
  }

  static BasicPoly constant(Scalar c, Real a = Real(-1), Real b = Real(1)) {
    return BasicPoly({c}, a, b);
  }

  static BasicPoly monomial(int k, Real a = Real(-1), Real b = Real(1)) {
    std::vector<Scalar> c(static_cast<std::size_t>(k) + 1, Scalar(0));
    c.back() = Scalar(1);
    return BasicPoly(std::move(c), a, b);
  }

  static BasicPoly identity(Real a = Real(-1), Real b = Real(1)) { return monomial(1, a, b); }

  // Coefficients in ascending degree, trailing zeros removed. Empty for the zero polynomial.
  const std::vector<Scalar>& coefficients() const { return coeffs_; }
  Real lower() const { return a_; }
  Real upper() const { return b_; }

  bool is_zero() const { return coeffs_.empty(); }
  int degree() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1; }

  Scalar coefficient(int k) const {
    return k >= 0 && k < static_cast<int>(coeffs_.size()) ? coeffs_[static_cast<std::size_t>(k)]
                                                          : Scalar(0);
  }

  bool is_real() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const Scalar& c) { return c.imag() == Real(0); });
  }

  template <typename T>
  auto operator()(const T& x) const {
    using R = decltype(Scalar() * x);
    R acc(0);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Real real_at(Real x) const { return (*this)(x).real(); }

  // Sum of |c_k| * max(|a|,|b|)^k; a coarse sup-norm scale used for tolerances.
  Real scale() const {
    const Real r = std::max({std::abs(a_), std::abs(b_), Real(1)});
    Real s = 0, p = 1;
    for (const auto& c : coeffs_) {
      s += std::abs(c) * p;
      p *= r;
    }
    return s;
  }

  BasicPoly with_interval(Real a, Real b) const { return BasicPoly(coeffs_, a, b); }

  BasicPoly& operator+=(const BasicPoly& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), Scalar(0));
    for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
    trim();
    return *this;
  }
  BasicPoly& operator-=(const BasicPoly& o) { return *this += o * Scalar(-1); }
  BasicPoly& operator*=(Scalar s) {
    for (auto& c : coeffs_) c *= s;
    trim();
    return *this;
  }

  friend BasicPoly operator+(BasicPoly l, const BasicPoly& r) { return l += r; }
  friend BasicPoly operator-(BasicPoly l, const BasicPoly& r) { return l -= r; }
  friend BasicPoly operator*(BasicPoly p, Scalar s) { return p *= s; }
  friend BasicPoly operator*(Scalar s, BasicPoly p) { return p *= s; }
  friend BasicPoly operator-(BasicPoly p) { return p *= Scalar(-1); }

  friend BasicPoly operator*(const BasicPoly& l, const BasicPoly& r) {
    if (l.is_zero() || r.is_zero()) return BasicPoly({}, l.a_, l.b_);
    std::vector<Scalar> out(l.coeffs_.size() + r.coeffs_.size() - 1, Scalar(0));
    for (std::size_t i = 0; i < l.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < r.coeffs_.size(); ++j) out[i + j] += l.coeffs_[i] * r.coeffs_[j];
    return BasicPoly(std::move(out), l.a_, l.b_);
  }

  friend bool operator==(const BasicPoly& l, const BasicPoly& r) {
    return l.coeffs_ == r.coeffs_ && l.a_ == r.a_ && l.b_ == r.b_;
  }

 private:
  void trim() {
    while (!coeffs_.empty() && coeffs_.back() == Scalar(0)) coeffs_.pop_back();
  }

  std::vector<Scalar> coeffs_;
  Real a_ = Real(-1);
  Real b_ = Real(1);
};

using PolyFunction = BasicPoly<double>;

template <typename Real>
BasicPoly<Real> derivative(const BasicPoly<Real>& p) {
  using S = typename BasicPoly<Real>::Scalar;
  const auto& c = p.coefficients();
  std::vector<S> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(c[k] * Real(k));
  return BasicPoly<Real>(std::move(d), p.lower(), p.upper());
}

// Indefinite integral, normalized to vanish at the left end of the interval.
template <typename Real>
BasicPoly<Real> antiderivative(const BasicPoly<Real>& p) {
  using S = typename BasicPoly<Real>::Scalar;
  const auto& c = p.coefficients();
  std::vector<S> out(c.size() + 1, S(0));
  for (std::size_t k = 0; k < c.size(); ++k) out[k + 1] = c[k] / Real(k + 1);
  BasicPoly<Real> raw(out, p.lower(), p.upper());
  out[0] = -raw(p.lower());
  return BasicPoly<Real>(std::move(out), p.lower(), p.upper());
}

// (p(t2) - p(t1)) / (t2 - t1), and p'(t) on the diagonal. Evaluated as the
// quotient q of p(x) = (x - t1) q(x) + p(t1) at x = t2, which has no
// cancellation for nearby arguments.
template <typename Real>
std::complex<Real> divided_difference(const BasicPoly<Real>& p, Real t1, Real t2) {
  using S = std::complex<Real>;
  const auto& c = p.coefficients();
  if (c.size() < 2) return S(0);
  // Synthetic division: quotient coefficients from the top down, evaluated at t2 on the fly.
  S b = c.back();
  S q = b;
  for (std::size_t k = c.size() - 2; k >= 1; --k) {
    b = c[k] + t1 * b;
    q = q * t2 + b;
  }
  return q;
}

// Trigonometric polynomial sum_k c_k e^{i k theta}.
template <typename Real>
class BasicTrigPoly {
 public:
  using Scalar = std::complex<Real>;

  BasicTrigPoly() = default;
  explicit BasicTrigPoly(std::map<int, Scalar> coefficients) : coeffs_(std::move(coefficients)) {
    std::erase_if(coeffs_, [](const auto& kv) { return kv.second == Scalar(0); });
  }

  const std::map<int, Scalar>& coefficients() const { return coeffs_; }

  Scalar operator()(Real theta) const {
    Scalar s(0);
    for (const auto& [k, c] : coeffs_) s += c * std::polar(Real(1), Real(k) * theta);
    return s;
  }

 private:
  std::map<int, Scalar> coeffs_;
};

using TrigPoly = BasicTrigPoly<double>;

// (1/sqrt(2 pi)) sum_k |c_k| (1 + |k|)
template <typename Real>
Real c11_norm(const BasicTrigPoly<Real>& f) {
  Real s = 0;
  for (const auto& [k, c] : f.coefficients()) s += std::abs(c) * (Real(1) + std::abs(Real(k)));
  return s / std::sqrt(Real(2) * std::numbers::pi_v<Real>);
}

// Chebyshev interpolant of degree n on [a,b] (first-kind nodes), evaluated by Clenshaw.
template <typename Real>
class BasicChebyshev {
 public:
  BasicChebyshev() = default;

  template <typename F>
  BasicChebyshev(F&& f, Real a, Real b, int degree) : a_(a), b_(b), coeffs_(degree + 1, Real(0)) {
    if (!(a < b)) throw ValidationError("Chebyshev interval requires a < b");
    if (degree < 0) throw ValidationError("Chebyshev degree must be non-negative");
    const int n = degree + 1;
    std::vector<Real> values(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const Real theta = std::numbers::pi_v<Real> * (Real(k) + Real(0.5)) / Real(n);
      const Real x = std::cos(theta);
      values[static_cast<std::size_t>(k)] = f(Real(0.5) * (b + a) + Real(0.5) * (b - a) * x);
    }
    for (int j = 0; j < n; ++j) {
      Real s = 0;
      for (int k = 0; k < n; ++k)
        s += values[static_cast<std::size_t>(k)] *
             std::cos(std::numbers::pi_v<Real> * Real(j) * (Real(k) + Real(0.5)) / Real(n));
      coeffs_[static_cast<std::size_t>(j)] = (j == 0 ? Real(1) : Real(2)) * s / Real(n);
    }
  }

  Real operator()(Real x) const {
    const Real u = (Real(2) * x - (a_ + b_)) / (b_ - a_);
    Real b1 = 0, b2 = 0;
    for (std::size_t j = coeffs_.size(); j-- > 1;) {
      const Real t = Real(2) * u * b1 - b2 + coeffs_[j];
      b2 = b1;
      b1 = t;
    }
    return u * b1 - b2 + (coeffs_.empty() ? Real(0) : coeffs_[0]);
  }

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  Real lower() const { return a_; }
  Real upper() const { return b_; }

 private:
  Real a_ = Real(-1);
  Real b_ = Real(1);
  std::vector<Real> coeffs_;
};

using ChebyshevFunction = BasicChebyshev<double>;

// Smoothed indefinite integral of the indicator of [lo,hi] inside [a,b]:
// the ramp lambda -> clamp(lambda, lo, hi) - lo, interpolated at the given degree.
template <typename Real>
BasicChebyshev<Real> indicator_ramp(Real lo, Real hi, Real a, Real b, int degree = 64) {
  if (hi < lo) throw ValidationError("indicator ramp requires lo <= hi");
  return BasicChebyshev<Real>(
      [lo, hi](Real x) { return std::clamp(x, lo, hi) - lo; }, a, b, degree);
}

// Finite sum  sum_j c_j alpha_j(t) psi_j(lambda).
template <typename Real>
class BasicSeparable {
 public:
  using Scalar = std::complex<Real>;
  using Poly = BasicPoly<Real>;

  struct Term {
    Scalar coefficient;
    Poly alpha;  // factor in t (acts through X)
    Poly psi;    // factor in lambda (acts through Y)
  };

  BasicSeparable() = default;
  explicit BasicSeparable(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const auto& term : terms_) {
      if (term.alpha.lower() != terms_.front().alpha.lower() ||
          term.alpha.upper() != terms_.front().alpha.upper() ||
          term.psi.lower() != terms_.front().alpha.lower() ||
          term.psi.upper() != terms_.front().alpha.upper())
        throw ValidationError("separable function terms must share one interval");
    }
  }

  static BasicSeparable single(Scalar c, Poly alpha, Poly psi) {
    return BasicSeparable({Term{c, std::move(alpha), std::move(psi)}});
  }
  // Function of t only.
  static BasicSeparable in_t(const Poly& alpha) {
    return single(Scalar(1), alpha, Poly::constant(Scalar(1), alpha.lower(), alpha.upper()));
  }
  // Function of lambda only.
  static BasicSeparable in_lambda(const Poly& psi) {
    return single(Scalar(1), Poly::constant(Scalar(1), psi.lower(), psi.upper()), psi);
  }

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  Real lower() const { return terms_.empty() ? Real(-1) : terms_.front().alpha.lower(); }
  Real upper() const { return terms_.empty() ? Real(1) : terms_.front().alpha.upper(); }

  // max_j deg(alpha_j) + deg(psi_j)
  int joint_degree() const {
    int d = 0;
    for (const auto& term : terms_) d = std::max(d, term.alpha.degree() + term.psi.degree());
    return d;
  }

  Scalar operator()(Real t, Real lambda) const {
    Scalar s(0);
    for (const auto& term : terms_) s += term.coefficient * term.alpha(t) * term.psi(lambda);
    return s;
  }

  BasicSeparable& operator+=(const BasicSeparable& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  BasicSeparable& operator*=(Scalar s) {
    for (auto& term : terms_) term.coefficient *= s;
    return *this;
  }
  friend BasicSeparable operator+(BasicSeparable l, const BasicSeparable& r) { return l += r; }
  friend BasicSeparable operator*(BasicSeparable f, Scalar s) { return f *= s; }
  friend BasicSeparable operator*(Scalar s, BasicSeparable f) { return f *= s; }
  friend BasicSeparable operator-(BasicSeparable f) { return f *= Scalar(-1); }

  friend BasicSeparable operator*(const BasicSeparable& l, const BasicSeparable& r) {
    std::vector<Term> out;
    for (const auto& x : l.terms_)
      for (const auto& y : r.terms_)
        out.push_back({x.coefficient * y.coefficient, x.alpha * y.alpha, x.psi * y.psi});
    return BasicSeparable(std::move(out));
  }

 private:
  std::vector<Term> terms_;
};

using SeparableBivariate = BasicSeparable<double>;

template <typename Real>
BasicSeparable<Real> partial_t(const BasicSeparable<Real>& f) {
  std::vector<typename BasicSeparable<Real>::Term> out;
  for (const auto& term : f.terms()) out.push_back({term.coefficient, derivative(term.alpha), term.psi});
  return BasicSeparable<Real>(std::move(out));
}

template <typename Real>
BasicSeparable<Real> partial_lambda(const BasicSeparable<Real>& f) {
  std::vector<typename BasicSeparable<Real>::Term> out;
  for (const auto& term : f.terms()) out.push_back({term.coefficient, term.alpha, derivative(term.psi)});
  return BasicSeparable<Real>(std::move(out));
}

// J(F, G) = F_t G_lambda - F_lambda G_t
template <typename Real>
BasicSeparable<Real> jacobian(const BasicSeparable<Real>& f, const BasicSeparable<Real>& g) {
  if (!f.empty() && !g.empty() && (f.lower() != g.lower() || f.upper() != g.upper()))
    throw ValidationError("jacobian requires both functions on the same interval");
  return partial_t(f) * partial_lambda(g) + -(partial_lambda(f) * partial_t(g));
}

// Dense coefficient table: entry (p, q) multiplies t^p lambda^q.
template <typename Real>
Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic> coefficient_grid(
    const BasicSeparable<Real>& f) {
  int dt = 0, dl = 0;
  for (const auto& term : f.terms()) {
    dt = std::max(dt, term.alpha.degree());
    dl = std::max(dl, term.psi.degree());
  }
  Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic> grid =
      Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>::Zero(dt + 1, dl + 1);
  for (const auto& term : f.terms()) {
    const auto& a = term.alpha.coefficients();
    const auto& p = term.psi.coefficients();
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j)
        grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            term.coefficient * a[i] * p[j];
  }
  return grid;
}

// Same function regrouped as sum_p t^p (sum_q c_pq lambda^q), one term per power
// of t. Terms that cancel in the coefficient table disappear.
template <typename Real>
BasicSeparable<Real> collapse_terms(const BasicSeparable<Real>& f) {
  using Poly = BasicPoly<Real>;
  const auto grid = coefficient_grid(f);
  std::vector<typename BasicSeparable<Real>::Term> out;
  for (Eigen::Index p = 0; p < grid.rows(); ++p) {
    std::vector<std::complex<Real>> row(static_cast<std::size_t>(grid.cols()));
    for (Eigen::Index q = 0; q < grid.cols(); ++q) row[static_cast<std::size_t>(q)] = grid(p, q);
    Poly psi(std::move(row), f.lower(), f.upper());
    if (!psi.is_zero()) out.push_back({std::complex<Real>(1), Poly::monomial(static_cast<int>(p), f.lower(), f.upper()), psi});
  }
  return BasicSeparable<Real>(std::move(out));
}

}  // namespace plab
