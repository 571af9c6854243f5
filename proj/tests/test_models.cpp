#include <doctest.h>

#include <numbers>

#include "plab/models.hpp"
#include "support.hpp"

using namespace plab;
using plab::testing::max_abs;

namespace {

HyponormalModel make(ModelKind kind, int m, int n, double c = 0, double phase = 0, double q = 0.5) {
  ModelSpec s;
  s.kind = kind;
  s.ambient_dim = m;
  s.corner_dim = n;
  s.c = c;
  s.phase = phase;
  s.q = q;
  return build(s);
}

ComplexMatrix defect(const HyponormalModel& m) {
  return std::complex<double>(0, -1) * commutator(m.Y().matrix(), m.X().matrix());
}

int bandwidth(const SparseOperator& s) {
  int w = 0;
  for (int k = 0; k < s.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(s, k); it; ++it)
      if (it.value() != 0.0) w = std::max(w, static_cast<int>(std::abs(it.row() - it.col())));
  return w;
}

}  // namespace

TEST_CASE("model specs validate their parameters") {
  ModelSpec s;
  s.ambient_dim = 64;
  s.corner_dim = 33;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.corner_dim = 32;
  CHECK_NOTHROW(s.validate());
  s.kind = ModelKind::elliptic;
  s.c = 1.0;
  CHECK_THROWS_AS(build(s), ValidationError);
  s.c = -0.1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.kind = ModelKind::q_weighted;
  s.q = 1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK(parse_model_kind("elliptic") == ModelKind::elliptic);
  CHECK_THROWS_AS(parse_model_kind("disc"), ValidationError);
}

TEST_CASE("shift self-commutator is exact up to the edge") {
  const auto m = make(ModelKind::shift, 256, 32);
  ComplexMatrix expected = ComplexMatrix::Zero(256, 256);
  expected(0, 0) = 0.5;
  expected(255, 255) = -0.5;
  CHECK(max_abs(defect(m) - expected) < 1e-15);
  ComplexMatrix d2 = ComplexMatrix::Zero(256, 256);
  d2(0, 0) = 0.5;
  CHECK(max_abs(ComplexMatrix(m.d2_analytic) - d2) == 0.0);
  CHECK(m.trD2 == 0.5);
  CHECK(m.edge_begin == 256 - 32);
}

TEST_CASE("elliptic model") {
  const auto m = make(ModelKind::elliptic, 256, 32, 0.3);
  CHECK(m.trD2 == doctest::Approx(0.455).epsilon(1e-15));
  CHECK(m.trD2 == doctest::Approx(std::numbers::pi * 1.3 * 0.7 / (2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(m.a == doctest::Approx(-1.3));
  CHECK(m.b == doctest::Approx(1.3));
  const ComplexMatrix d = defect(m);
  const ComplexMatrix d2 = ComplexMatrix(m.d2_analytic);
  CHECK(max_abs(d.topLeftCorner(m.edge_begin, m.edge_begin) - d2.topLeftCorner(m.edge_begin, m.edge_begin)) < 1e-15);
  CHECK(verify_hyponormal(m).trace_gap < 1e-12);

  const auto tight = make(ModelKind::elliptic, 128, 16, 0.99);
  CHECK(tight.trD2 == doctest::Approx(0.00995).epsilon(1e-12));
  CHECK_NOTHROW(verify_hyponormal(tight));
}

TEST_CASE("q-weighted model telescopes") {
  const auto m = make(ModelKind::q_weighted, 64, 16, 0, 0, 0.5);
  const ComplexMatrix d2 = ComplexMatrix(m.d2_analytic);
  CHECK(max_abs(d2 - ComplexMatrix(d2.diagonal().asDiagonal())) == 0.0);
  CHECK(d2(0, 0).real() == doctest::Approx(0.25));
  CHECK(d2(1, 1).real() == doctest::Approx(0.125));
  CHECK(std::abs(2.0 * trace(d2) - (1 - std::pow(0.5, 64))) < 1e-15);
  const ComplexMatrix d = defect(m);
  CHECK(max_abs(d.topLeftCorner(m.edge_begin, m.edge_begin) - d2.topLeftCorner(m.edge_begin, m.edge_begin)) < 1e-15);
  CHECK_FALSE(m.has_symbol());
  CHECK_FALSE(m.expected_r.has_value());
  CHECK_THROWS_AS(winding_r(m, 0, 0), UnsupportedModel);
  CHECK_THROWS_AS(closed_form_moment(m, 0, 0), UnsupportedModel);
}

TEST_CASE("winding-number principal function") {
  const auto shift = make(ModelKind::shift, 64, 8);
  CHECK(winding_r(shift, 2, 0) == 0.0);
  CHECK(winding_r(shift, 0, 0) == doctest::Approx(1 / (2 * std::numbers::pi)).epsilon(1e-12));
  const auto ell = make(ModelKind::elliptic, 64, 8, 0.3);
  CHECK(winding_r(ell, 0.8, 0.68) == 0.0);
  CHECK(winding_r(ell, 1.2, 0.0) == doctest::Approx(1 / (2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(winding_r(ell, 0.0, 0.75) == 0.0);
  // phase pi/2 rotates the ellipse by pi/4.
  const auto rot = make(ModelKind::elliptic, 64, 8, 0.3, std::numbers::pi / 2);
  CHECK(winding_r(rot, 0.85, 0.85) > 0.0);
  CHECK(winding_r(rot, 0.6, -0.6) == 0.0);
  for (double t : {-0.5, 0.1, 0.7})
    for (double l : {-0.3, 0.4})
      CHECK(winding_r(ell, t, l) == doctest::Approx((*ell.expected_r)(t, l)).epsilon(1e-12));
}

TEST_CASE("closed-form moments match area integrals") {
  const auto shift = make(ModelKind::shift, 64, 8);
  CHECK(closed_form_moment(shift, 0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(closed_form_moment(shift, 2, 0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(std::abs(closed_form_moment(shift, 1, 1)) < 1e-15);
  const auto ell = make(ModelKind::elliptic, 64, 8, 0.3);
  CHECK(closed_form_moment(ell, 2, 0) == doctest::Approx(0.19223750).epsilon(1e-12));
  CHECK(closed_form_moment(ell, 0, 2) == doctest::Approx(0.05573750).epsilon(1e-12));
  const auto rot = make(ModelKind::elliptic, 64, 8, 0.3, std::numbers::pi / 2);
  CHECK(closed_form_moment(rot, 1, 1) == doctest::Approx(0.06825).epsilon(1e-12));
}

TEST_CASE("structural invariants of every model") {
  for (auto kind : {ModelKind::shift, ModelKind::elliptic, ModelKind::q_weighted}) {
    const auto m = make(kind, 128, 16, 0.4, 1.1, 0.3);
    CAPTURE(m.spec.id());
    CHECK(bandwidth(m.x_band) == 1);
    CHECK(bandwidth(m.y_band) == 1);
    const auto report = verify_hyponormal(m);
    CHECK(report.d2_min_eigenvalue >= -1e-12);
    CHECK(report.corner_mismatch <= 1e-15);
    CHECK(report.spectrum_min >= m.a);
    CHECK(report.spectrum_max <= m.b);
    const auto xs = tridiagonal_spectrum(m.x_band);
    CHECK((xs - eigvalsh(m.X())).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(verify_hyponormal(make(ModelKind::shift, 64, 8)).d2_min_eigenvalue == 0.0);
}

TEST_CASE("corner traces are stable under doubling M") {
  for (auto kind : {ModelKind::shift, ModelKind::elliptic, ModelKind::q_weighted}) {
    std::complex<double> prev;
    for (int m : {128, 256, 512}) {
      const auto model = make(kind, m, 16, 0.3, 0.7, 0.6);
      // -i[Y^3, X^2], degree 5 < N - 2.
      const ComplexMatrix x = model.X().matrix(), y = model.Y().matrix();
      const ComplexMatrix k = std::complex<double>(0, -1) * commutator(ComplexMatrix(y * y * y), ComplexMatrix(x * x));
      const auto value = corner_trace(k, 16);
      if (m > 128) CHECK(std::abs(value - prev) <= 1e-12);
      prev = value;
    }
  }
}

TEST_CASE("quarter turn rotates the model") {
  const auto m = make(ModelKind::elliptic, 128, 16, 0.3, 0.4);
  const auto r = rotated_quarter_turn(m);
  CHECK(max_abs(r.X().matrix() + m.Y().matrix()) == 0.0);
  CHECK(max_abs(r.Y().matrix() - m.X().matrix()) == 0.0);
  CHECK(r.trD2 == m.trD2);
  CHECK(r.quarter_turns == 1);
  // r'(t, l) = r(l, -t)
  for (double t : {-0.6, 0.2, 0.9})
    for (double l : {-0.8, 0.0, 0.5})
      CHECK(winding_r(r, t, l) == doctest::Approx(winding_r(m, l, -t)).epsilon(1e-12));
  CHECK(closed_form_moment(r, 1, 2) == doctest::Approx(-closed_form_moment(m, 2, 1)).epsilon(1e-12));
}

TEST_CASE("expected density integrates to the trace of D^2") {
  for (double c : {0.0, 0.3, 0.6}) {
    const auto m = make(ModelKind::elliptic, 64, 8, c, 0.9);
    const int n = 1200;
    const double h = (m.b - m.a) / n;
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += (*m.expected_r)(m.a + (i + 0.5) * h, m.a + (j + 0.5) * h);
    CHECK(std::abs(s * h * h - m.trD2) < 2e-3);
  }
}
