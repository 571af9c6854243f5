#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include "plab/linalg.hpp"
#include "plab/poly.hpp"

namespace plab::testing {

inline std::mt19937_64 rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

inline double uniform(std::mt19937_64& g, double lo = -1, double hi = 1) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline ComplexMatrix random_matrix(std::mt19937_64& g, int n) {
  ComplexMatrix m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = {uniform(g), uniform(g)};
  return m;
}

// Spectrum roughly inside [-1, 1].
inline HermitianOperator random_hermitian(std::mt19937_64& g, int n) {
  const ComplexMatrix a = random_matrix(g, n);
  return HermitianOperator::hermitian_part(a / (2.0 * std::sqrt(double(n))));
}

inline HermitianOperator random_psd(std::mt19937_64& g, int n) {
  const ComplexMatrix b = random_matrix(g, n);
  return HermitianOperator::hermitian_part(b * b.adjoint() / double(n));
}

inline PolyFunction random_poly(std::mt19937_64& g, int degree, double a = -1, double b = 1) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1);
  for (auto& x : c) x = uniform(g);
  return PolyFunction::from_real(c, a, b);
}

inline double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace plab::testing
