#include <doctest.h>

#include "plab/krein.hpp"
#include "plab/principal.hpp"
#include "support.hpp"

using namespace plab;
using namespace plab::testing;

namespace {

HermitianOperator diag(std::initializer_list<double> d) {
  RVector<double> v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index k = 0;
  for (double x : d) v(k++) = x;
  return HermitianOperator::diagonal(v);
}

HermitianOperator shifted(const HermitianOperator& h, const HermitianOperator& v) {
  return HermitianOperator::hermitian_part(h.matrix() + v.matrix());
}

HyponormalModel make(ModelKind kind, int m, int n, double c = 0.3) {
  ModelSpec s;
  s.kind = kind;
  s.ambient_dim = m;
  s.corner_dim = n;
  s.c = c;
  return build(s);
}

}  // namespace

TEST_CASE("spectral shift examples") {
  const HermitianOperator h0 = diag({0, 1});
  CHECK(spectral_shift(PerturbationPair(h0, h0)).is_zero());

  const auto one = spectral_shift(PerturbationPair(diag({0}), diag({0.5})));
  CHECK(one.breakpoints() == std::vector<double>{0.0, 0.5});
  CHECK(one.values() == std::vector<int>{1});
  CHECK(one(0.0) == 1);
  CHECK(one(0.5) == 0);
  CHECK(one(-0.1) == 0);

  const auto two = spectral_shift(PerturbationPair(h0, diag({0.5, 1.5})));
  CHECK(two.breakpoints() == std::vector<double>{0.0, 0.5, 1.0, 1.5});
  CHECK(two.values() == std::vector<int>{1, 0, 1});
  CHECK(two.integral() == doctest::Approx(1.0));
  CHECK(two(0.7) == 0);
  CHECK(two(1.2) == 1);

  CHECK_THROWS_AS(PerturbationPair(diag({0}), diag({0, 1})), DimensionMismatch);
  CHECK_THROWS_AS(SpectralShiftFunction({0.0, 1.0}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(SpectralShiftFunction({1.0, 0.0}, {1}), ValidationError);
}

TEST_CASE("Krein trace formula examples") {
  const PerturbationPair pair(diag({0, 1}), diag({0.5, 1.5}));
  const auto lin = krein_check(pair, PolyFunction::identity());
  CHECK(lin.lhs == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lin.rhs == doctest::Approx(1.0).epsilon(1e-15));
  const auto sq = krein_check(pair, PolyFunction::monomial(2));
  CHECK(sq.lhs == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(sq.rhs == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("Krein identity and trace bounds on random pairs") {
  auto g = rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(g() % 50);
    const HermitianOperator h0 = random_hermitian(g, n);
    const HermitianOperator v = trial % 2 ? random_hermitian(g, n) : random_psd(g, n);
    const PerturbationPair pair(h0, shifted(h0, v));
    const auto xi = spectral_shift(pair);
    const double tr_v = trace(v.matrix()).real();
    CHECK(std::abs(xi.integral() - tr_v) <= 1e-9);
    CHECK(xi.abs_integral() <= trace_norm(v) + 1e-9);
    const PolyFunction phi = random_poly(g, static_cast<int>(g() % 9));
    const auto kc = krein_check(pair, phi);
    CHECK(kc.gap() <= 1e-8 * (1 + trace_norm(v) * derivative(phi).scale()));
  }
}

TEST_CASE("sign of the spectral shift follows the sign of the perturbation") {
  auto g = rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const HermitianOperator h0 = random_hermitian(g, 20), v = random_psd(g, 20);
    CHECK(spectral_shift(PerturbationPair(h0, shifted(h0, v))).min_value() >= 0);
    const HermitianOperator minus = HermitianOperator::hermitian_part(-v.matrix());
    CHECK(spectral_shift(PerturbationPair(h0, shifted(h0, minus))).max_value() <= 0);
  }
}

TEST_CASE("spectral shift is unitarily invariant") {
  auto g = rng(33);
  const HermitianOperator h0 = random_hermitian(g, 15), h = random_hermitian(g, 15);
  const ComplexMatrix w = apply_function_general(eigh(random_hermitian(g, 15)), [](double x) {
    return std::polar(1.0, 3 * x);
  });
  const auto conj = [&w](const HermitianOperator& a) {
    return HermitianOperator::hermitian_part(w * a.matrix() * w.adjoint());
  };
  const auto xi = spectral_shift(PerturbationPair(h0, h));
  const auto xw = spectral_shift(PerturbationPair(conj(h0), conj(h)));
  REQUIRE(xi.breakpoints().size() == xw.breakpoints().size());
  CHECK(xi.values() == xw.values());
  for (std::size_t k = 0; k < xi.breakpoints().size(); ++k)
    CHECK(std::abs(xi.breakpoints()[k] - xw.breakpoints()[k]) <= 1e-9);
}

TEST_CASE("coincident eigenvalues cancel") {
  // Shared eigenvalue 0.3: the canonical form has no zero-width interval.
  const auto xi = spectral_shift(PerturbationPair(diag({0.3, 1}), diag({0.3, 2})));
  CHECK(xi.breakpoints() == std::vector<double>{1.0, 2.0});
  CHECK(xi.values() == std::vector<int>{1});
}

TEST_CASE("pairing, reflection and windowed integrals") {
  const SpectralShiftFunction xi({-1.0, 0.0, 2.0}, {1, -2});
  CHECK(xi.integral() == doctest::Approx(-3.0));
  CHECK(xi.abs_integral() == doctest::Approx(5.0));
  CHECK(xi.integral_over(-0.5, 1.0) == doctest::Approx(0.5 - 2.0));
  CHECK(xi.pair_with(PolyFunction::monomial(2)) == doctest::Approx(1 * (0 - 1) - 2 * (4 - 0)));
  CHECK(xi.pair_with([](double x) { return x * x; }, -0.5, 1.0) == doctest::Approx(-0.25 - 2.0));
  CHECK(xi.negated().integral() == doctest::Approx(3.0));
  const auto r = xi.reflected();
  CHECK(r(-1.0) == -2);
  CHECK(r(0.5) == 1);
  CHECK(r.integral() == doctest::Approx(-3.0));
  CHECK(xi.min_value() == -2);
  CHECK(xi.max_value() == 1);
}

TEST_CASE("slices of the conjugated pair") {
  for (auto kind : {ModelKind::shift, ModelKind::elliptic, ModelKind::q_weighted}) {
    const auto m = make(kind, 128, 16);
    CAPTURE(m.spec.id());
    CHECK(xi_slice(m, PolyFunction::constant(2.5, m.a, m.b)).shift.is_zero());
    CHECK(eta_slice(m, PolyFunction::constant(0.0, m.a, m.b)).shift.is_zero());
    const PolyFunction psi = PolyFunction::from_real({0.1, 1.0, -0.4, 0.7}, m.a, m.b);
    CHECK(std::abs(xi_slice(m, psi).total_integral) <= 1e-9);
    CHECK(std::abs(eta_slice(m, psi).total_integral) <= 1e-9);
    const auto window = interior_window(m);
    CHECK(window.first == doctest::Approx(m.a + 0.1 * (m.b - m.a)));
    CHECK(window.second == doctest::Approx(m.b - 0.1 * (m.b - m.a)));
  }
}

TEST_CASE("compressed slices carry the trace defect") {
  const auto m = make(ModelKind::shift, 256, 32);
  const PolyFunction id = PolyFunction::identity();
  const auto xi = xi_slice(m, id, 128);
  CHECK(xi.compressed_dim == 128);
  // -i Tr[psi(Y), phi(X)] with phi = lambda is Tr psi'(Y) D^2 = 1/2.
  CHECK(xi.total_integral == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(xi.shift.min_value() >= 0);
  const auto eta = eta_slice(m, id, 128);
  CHECK(eta.total_integral == doctest::Approx(0.5).epsilon(1e-9));

  // The compressed shift is symmetric under (X, Y) -> (Y, -X), so eta is xi reflected.
  const auto refl = xi.shift.reflected();
  for (double lo = -1.0; lo < 1.0; lo += 0.125)
    CHECK(std::abs(refl.integral_over(lo, lo + 0.125) - eta.shift.integral_over(lo, lo + 0.125)) <= 1e-9);

  // Rotating the model relabels the pair: with phi(t) = -t the rotated eta is -xi.
  const auto rot = rotated_quarter_turn(m);
  const auto eta_rot = eta_slice(rot, PolyFunction::from_real({0, -1}), 128).shift;
  const auto neg = xi.shift.negated();
  REQUIRE(eta_rot.breakpoints().size() == neg.breakpoints().size());
  CHECK(eta_rot.values() == neg.values());
  for (std::size_t k = 0; k < neg.breakpoints().size(); ++k)
    CHECK(std::abs(eta_rot.breakpoints()[k] - neg.breakpoints()[k]) <= 1e-12);

  CHECK_THROWS_AS(xi_slice(m, id, 300), ValidationError);
  CHECK(compress(m.X(), 0).dim() == 256);
  CHECK(compress(m.X(), 10).dim() == 10);
}
