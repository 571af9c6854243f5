#pragma once

// Krein spectral shift function of a pair of Hermitian matrices, stored exactly
// as the difference of the two eigenvalue counting functions.

#include <complex>
#include <functional>
#include <vector>

#include "plab/linalg.hpp"
#include "plab/models.hpp"

namespace plab {

class SpectralShiftFunction {
 public:
  SpectralShiftFunction() = default;
  // values[k] is the value on (breakpoints[k], breakpoints[k+1]); zero outside.
  SpectralShiftFunction(std::vector<double> breakpoints, std::vector<int> values);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<int>& values() const { return values_; }

  // Right-continuous evaluation.
  int operator()(double lambda) const;

  double integral() const;
  double abs_integral() const;
  bool is_zero() const { return values_.empty(); }
  int min_value() const;
  int max_value() const;

  // Integral of phi' xi over [lo, hi], evaluated exactly as sum value * (phi(r) - phi(l)).
  double pair_with(const std::function<double(double)>& phi,
                   double lo = -std::numeric_limits<double>::infinity(),
                   double hi = std::numeric_limits<double>::infinity()) const;
  double pair_with(const PolyFunction& phi, double lo = -std::numeric_limits<double>::infinity(),
                   double hi = std::numeric_limits<double>::infinity()) const;

  // Integral of xi over [lo, hi].
  double integral_over(double lo, double hi) const;

  SpectralShiftFunction negated() const;
  // lambda -> xi(-lambda)
  SpectralShiftFunction reflected() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<int> values_;
};

struct PerturbationPair {
  HermitianOperator h0;
  HermitianOperator h;

  PerturbationPair(HermitianOperator unperturbed, HermitianOperator perturbed);
  ComplexMatrix perturbation() const { return h.matrix() - h0.matrix(); }
};

// xi(lambda) = #{eig(H0) <= lambda} - #{eig(H) <= lambda}, in canonical form:
// no zero-width intervals, no equal neighbours, no zero-valued ends.
SpectralShiftFunction spectral_shift(const PerturbationPair& pair);
SpectralShiftFunction spectral_shift(const RVector<double>& eig_h0, const RVector<double>& eig_h);

struct KreinCheck {
  double lhs = 0;  // Tr{phi(H) - phi(H0)}
  double rhs = 0;  // integral of phi' xi
  double gap() const { return std::abs(lhs - rhs); }
};

KreinCheck krein_check(const PerturbationPair& pair, const PolyFunction& phi);

// Slice of the conjugated pair plus the null-sum diagnostic.
struct SsfSlice {
  SpectralShiftFunction shift;
  double total_integral = 0;  // zero without compression: conjugation preserves the spectrum
  double window_lo = 0;       // default interior window [a + delta, b - delta]
  double window_hi = 0;
  int compressed_dim = 0;     // 0: full ambient space
};

// xi(t; psi): oriented so that -i Tr[psi(Y), phi(X)] = integral phi' xi, i.e.
// the spectral shift of the pair (e^{i psi(Y)} X e^{-i psi(Y)}, X).
//
// On C^M the two operators are unitarily equivalent, so xi vanishes identically.
// With 0 < compression < M both are first conjugated on C^M and then compressed
// to their leading compression x compression block, away from the truncation
// edge, which retains the defect carried by the low indices.
SsfSlice xi_slice(const HyponormalModel& model, const std::function<double(double)>& psi, int compression = 0);
SsfSlice xi_slice(const HyponormalModel& model, const PolyFunction& psi, int compression = 0);
// Same with a precomputed decomposition of Y and spectrum of the (compressed) X.
SsfSlice xi_slice(const HyponormalModel& model, const HermitianOperator& x, const SpectralDecomposition& yd,
                  const RVector<double>& x_spectrum, const std::function<double(double)>& psi, int compression = 0);

// eta(phi; lambda): spectral shift of the pair (Y, e^{i phi(X)} Y e^{-i phi(X)}).
SsfSlice eta_slice(const HyponormalModel& model, const std::function<double(double)>& phi, int compression = 0);
SsfSlice eta_slice(const HyponormalModel& model, const PolyFunction& phi, int compression = 0);

// Leading n x n block; n = 0 or n = dim returns h. Throws ValidationError otherwise out of range.
HermitianOperator compress(const HermitianOperator& h, int n);

// Interior spectral window [a + delta, b - delta], delta = fraction * (b - a).
std::pair<double, double> interior_window(const HyponormalModel& model, double fraction = 0.1);

}  // namespace plab
