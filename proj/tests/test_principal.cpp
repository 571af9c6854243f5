#include <doctest.h>

#include <numbers>

#include "plab/principal.hpp"
#include "support.hpp"

using namespace plab;
using namespace plab::testing;

namespace {

constexpr double kInvTwoPi = 1 / (2 * std::numbers::pi);

HyponormalModel make(ModelKind kind, int m, int n, double c = 0.3, double phase = 0) {
  ModelSpec s;
  s.kind = kind;
  s.ambient_dim = m;
  s.corner_dim = n;
  s.c = c;
  s.phase = phase;
  return build(s);
}

PolyFunction poly(std::vector<double> c, const HyponormalModel& m) { return PolyFunction::from_real(c, m.a, m.b); }

SeparableBivariate random_separable(std::mt19937_64& g, const HyponormalModel& m, int terms, int degree) {
  SeparableBivariate f;
  for (int k = 0; k < terms; ++k) {
    const int da = static_cast<int>(g() % (degree + 1));
    f += SeparableBivariate::single(uniform(g), random_poly(g, da, m.a, m.b),
                                    random_poly(g, degree - da, m.a, m.b));
  }
  return f;
}

}  // namespace

TEST_CASE("single-commutator trace identities on the shift") {
  const auto m = make(ModelKind::shift, 1024, 128);
  const std::vector<std::pair<PolyFunction, double>> cases = {
      {poly({0, 1}, m), 0.5}, {poly({0, 0, 1}, m), 0.0}, {poly({0, 0, 0, 1}, m), 0.375}};
  for (const auto& [psi, expected] : cases) {
    for (Axis axis : {Axis::y, Axis::x}) {
      const auto tp = lemma1_check(m, psi, axis);
      CHECK(std::abs(tp.lhs - expected) <= 1e-9);
      CHECK(std::abs(tp.rhs - expected) <= 1e-9);
    }
  }
  const auto small = make(ModelKind::shift, 16, 4);
  CHECK_THROWS_AS(lemma1_check(small, PolyFunction::monomial(5)), WindowTooSmall);
}

TEST_CASE("single-commutator identities on random polynomials and models") {
  auto g = rng(41);
  for (auto kind : {ModelKind::shift, ModelKind::elliptic, ModelKind::q_weighted}) {
    const auto m = make(kind, 256, 32, 0.45, 0.8);
    for (int trial = 0; trial < 5; ++trial) {
      const PolyFunction psi = random_poly(g, 1 + trial, m.a, m.b);
      for (Axis axis : {Axis::y, Axis::x}) CHECK(lemma1_check(m, psi, axis).gap() <= 1e-9 * psi.scale());
    }
  }
}

TEST_CASE("commutator moments") {
  const auto shift = make(ModelKind::shift, 1024, 128);
  CHECK(moment(shift, 0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(moment(shift, 2, 0) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(moment(shift, 0, 2) == doctest::Approx(0.125).epsilon(1e-12));
  for (auto [p, q] : {std::pair{1, 0}, {0, 1}, {1, 1}}) CHECK(std::abs(moment(shift, p, q)) <= 1e-12);

  const auto ell = make(ModelKind::elliptic, 1024, 128, 0.3);
  CHECK(std::abs(moment(ell, 0, 0) - 0.455) <= 1e-8);
  CHECK(std::abs(moment(ell, 2, 0) - 0.7 * 1.3 * 1.3 * 1.3 / 8) <= 1e-8);
  CHECK(std::abs(moment(ell, 0, 2) - 0.05573750) <= 1e-8);
  const auto rot = make(ModelKind::elliptic, 1024, 128, 0.3, std::numbers::pi / 2);
  CHECK(std::abs(moment(rot, 1, 1) - 0.06825) <= 1e-8);

  CHECK_THROWS_AS(moment(make(ModelKind::shift, 16, 4), 2, 2), WindowTooSmall);
}

TEST_CASE("moment tables agree with the closed form and the bivariate trace") {
  for (auto kind : {ModelKind::shift, ModelKind::elliptic}) {
    const auto m = make(kind, 256, 32, 0.3, 1.3);
    const auto table = moment_table(m, 5);
    const auto closed = closed_form_moment_table(m, 5);
    CHECK(table.max_degree == 5);
    CHECK(table.entries.size() == 21);
    CHECK(table.at(0, 0) >= 0);
    for (const auto& [pq, mu] : table.entries) {
      const auto [p, q] = pq;
      CHECK(std::abs(mu - closed.at(p, q)) <= 1e-8);
      // Same identity through the general bivariate path.
      const auto psi = SeparableBivariate::in_lambda(PolyFunction::monomial(q + 1, m.a, m.b) * (1.0 / (q + 1)));
      const auto phi = SeparableBivariate::in_t(PolyFunction::monomial(p + 1, m.a, m.b) * (1.0 / (p + 1)));
      CHECK(std::abs(generalized_trace_lhs(m, psi, phi) - mu) <= 1e-10);
    }
    CHECK_THROWS_AS(table.at(6, 0), ValidationError);
  }
  CHECK_THROWS_AS(closed_form_moment_table(make(ModelKind::q_weighted, 64, 8), 2), UnsupportedModel);
}

TEST_CASE("generalized trace examples") {
  const auto shift = make(ModelKind::shift, 1024, 128);
  const PolyFunction id = PolyFunction::identity();
  const auto lam = SeparableBivariate::in_lambda(id), t = SeparableBivariate::in_t(id);
  CHECK(std::abs(generalized_trace_lhs(shift, lam, t) - 0.5) <= 1e-12);
  CHECK(std::abs(generalized_trace_lhs(shift, SeparableBivariate::single(1.0, id, id), t + lam)) <= 1e-9);

  const auto rot = make(ModelKind::elliptic, 1024, 128, 0.3, std::numbers::pi / 2);
  const auto t2l = SeparableBivariate::single(1.0, PolyFunction::monomial(2, rot.a, rot.b), PolyFunction::identity(rot.a, rot.b));
  const auto l = SeparableBivariate::in_lambda(PolyFunction::identity(rot.a, rot.b));
  CHECK(std::abs(generalized_trace_lhs(rot, t2l, l) + 0.13650) <= 1e-9);
  CHECK(std::abs(generalized_trace_rhs_exact(rot, t2l, l) + 0.13650) <= 1e-9);
}

TEST_CASE("grid quadrature side of the bivariate formula") {
  const auto shift = make(ModelKind::shift, 256, 32);
  const DensityFunction disc = *shift.expected_r;
  const PolyFunction id = PolyFunction::identity();
  const auto lam = SeparableBivariate::in_lambda(id), t = SeparableBivariate::in_t(id);
  CHECK(std::abs(generalized_trace_rhs(lam, t, disc) - 0.5) <= 5e-3);
  CHECK(std::abs(generalized_trace_rhs_exact(shift, lam, t) - 0.5) <= 1e-15);

  const auto psi = SeparableBivariate::single(2.0, PolyFunction::from_real({1, 3, -1}), PolyFunction::from_real({0, 1, 2})) +
                   SeparableBivariate::single(-1.0, PolyFunction::from_real({0, 1}), PolyFunction::from_real({4, 0, 1}));
  CHECK(generalized_trace_rhs(psi, psi, disc) == std::complex<double>(0));
  auto g = rng(42);
  const auto noisy = random_separable(g, shift, 3, 4);
  CHECK(std::abs(generalized_trace_rhs(noisy, noisy, disc)) <= 1e-14);

  // -J(lambda, t^3/3) = t^2: the (2,0) moment.
  const auto cube = SeparableBivariate::in_t(PolyFunction::monomial(3) * (1.0 / 3));
  CHECK(std::abs(generalized_trace_rhs(lam, cube, disc) - 0.125) <= 2e-3);
  const auto est = sample_density(disc, -1, 1, 201);
  CHECK(std::abs(generalized_trace_rhs(lam, cube, est) - generalized_trace_rhs(lam, cube, disc)) <= 1e-14);
}

TEST_CASE("two-sided formula, bilinearity and M-invariance on random pairs") {
  auto g = rng(43);
  for (auto kind : {ModelKind::shift, ModelKind::elliptic}) {
    const auto m = make(kind, 256, 32, 0.3, 0.6);
    const auto big = make(kind, 512, 32, 0.3, 0.6);
    for (int trial = 0; trial < 4; ++trial) {
      const auto psi = random_separable(g, m, 2, 3), phi = random_separable(g, m, 2, 3);
      const auto chi = random_separable(g, m, 1, 3);
      const auto lhs = generalized_trace_lhs(m, psi, phi);
      CHECK(std::abs(lhs - generalized_trace_rhs_exact(m, psi, phi)) <= 1e-8);
      CHECK(std::abs(lhs - generalized_trace_lhs(big, psi, phi)) <= 1e-12);
      const std::complex<double> c(uniform(g), uniform(g));
      const auto combined = generalized_trace_lhs(m, psi, c * phi + chi);
      CHECK(std::abs(combined - (c * lhs + generalized_trace_lhs(m, psi, chi))) <= 1e-10);
      // A constant added to the first argument does not change the trace.
      const auto shifted = psi + SeparableBivariate::in_t(PolyFunction::constant(0.8, m.a, m.b));
      CHECK(std::abs(generalized_trace_lhs(m, shifted, phi) - lhs) <= 1e-12);
    }
  }
}

TEST_CASE("collapse of the mixed commutator") {
  auto g = rng(44);
  for (auto kind : {ModelKind::shift, ModelKind::elliptic, ModelKind::q_weighted}) {
    const auto m = make(kind, 256, 32, 0.3, 0.6);
    for (int trial = 0; trial < 3; ++trial) {
      const auto cc = collapse_check(m, random_poly(g, 2, m.a, m.b), random_poly(g, 2, m.a, m.b),
                                     random_poly(g, 2, m.a, m.b), random_poly(g, 2, m.a, m.b));
      CHECK(cc.full_trace_residual <= 1e-10);
      CHECK(cc.split_gap() <= 1e-9);
    }
  }
}

TEST_CASE("Legendre reconstruction") {
  // Moments of r = c on [-1,1]^2.
  MomentTable flat;
  flat.max_degree = 6;
  const double c = 0.37;
  const auto mono = [](int k) { return k % 2 ? 0.0 : 2.0 / (k + 1); };
  for (int p = 0; p <= 6; ++p)
    for (int q = 0; p + q <= 6; ++q) flat.entries[{p, q}] = c * mono(p) * mono(q);
  const auto est = reconstruct_r(flat, 3, 21);
  CHECK((est.values.array() - c).abs().maxCoeff() <= 1e-9);
  CHECK(reconstruct_at(flat, 3, 0.3, -0.9) == doctest::Approx(c).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(reconstruct_r(flat, 4, 21), doctest::Contains("incomplete moment table"), ValidationError);

  const auto shift = make(ModelKind::shift, 1024, 128);
  const auto table = moment_table(shift, 16);
  const auto r8 = reconstruct_r(table, 8, 101);
  CHECK(std::abs(r8.integral() - 0.5) <= 1e-9);
  CHECK(std::abs(reconstruct_at(table, 8, 0, 0) - kInvTwoPi) <= 0.03);
  CHECK(std::abs(r8.l1_mass - 0.5) <= 0.05 * 0.5);
  for (int p = 0; p <= 8; ++p)
    for (int q = 0; q <= 8; ++q) CHECK(std::abs(r8.moment(p, q) - table.at(p, q)) <= 1e-9);
  CHECK(r8.basis_degree == 8);

  double prev = std::numeric_limits<double>::infinity();
  for (int d : {4, 6, 8}) {
    const double err = std::abs(reconstruct_r(table, d, 101).l1_mass - 0.5);
    CHECK(err <= prev);
    prev = err;
  }
}

TEST_CASE("binned slice estimator") {
  const auto m = make(ModelKind::shift, 128, 16);
  const std::vector<double> edges = {-1, -0.5, 0, 0.5, 1};
  const auto window = interior_window(m);
  const auto raw = ssf_binned_r(m, edges, edges, window, 32);
  // Uncompressed slices are rounding-level step functions with zero total.
  CHECK(raw.estimate.values.cwiseAbs().maxCoeff() <= 1e-12);
  for (double s : raw.null_sums) CHECK(std::abs(s) <= 1e-9);

  const auto comp = ssf_binned_r(m, edges, edges, window, 32, 64);
  CHECK(comp.estimate.values.rows() == 4);
  double total = 0;
  for (double s : comp.null_sums) total += s;
  CHECK(total > 0.0);

  CHECK_THROWS_AS(ssf_binned_r(m, {-1, 0, 0, 1}, edges, window), ValidationError);
  CHECK_THROWS_AS(ssf_binned_r(m, {-1, 0.5}, edges, window), ValidationError);
}

TEST_CASE("positivity probe") {
  const auto m = make(ModelKind::shift, 1024, 128);
  CHECK(std::abs(positivity_probe(m, PolyFunction::identity())) <= 1e-10);
  CHECK(std::abs(positivity_probe(m, PolyFunction::from_real({0, -1})) + 0.5) <= 1e-10);
  // Increasing but not operator monotone: the corner block is indefinite.
  CHECK(std::abs(positivity_probe(m, PolyFunction::monomial(3)) - (1 - std::numbers::sqrt2) / 8) <= 1e-10);
}
