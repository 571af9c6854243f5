#pragma once

// Truncated purely hyponormal operators T = X + iY with closed-form
// self-commutator  -i[Y,X] = D^2  away from the truncation edge.

#include <functional>
#include <optional>
#include <string>

#include "plab/linalg.hpp"

namespace plab {

enum class ModelKind { shift, elliptic, q_weighted };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::shift;
  double c = 0.0;      // elliptic: T = S + c e^{i phase} S*, 0 <= c < 1
  double phase = 0.0;  // elliptic
  double q = 0.5;      // q_weighted: T e_j = sqrt(1 - q^{j+1}) e_{j+1}, 0 < q < 1
  int ambient_dim = 1024;
  int corner_dim = 128;

  // Throws ValidationError on out-of-range parameters or N > M/2.
  void validate() const;
  std::string id() const;
};

// Density callback r(t, lambda).
using DensityFunction = std::function<double(double, double)>;

struct HyponormalModel {
  ModelSpec spec;
  SparseOperator x_band;       // real part, bandwidth 1
  SparseOperator y_band;       // imaginary part, bandwidth 1
  SparseOperator d2_analytic;  // infinite-dimensional D^2 restricted to the first M indices
  int edge_begin = 0;          // first index of the truncation-contaminated edge window
  double a = -1.0;
  double b = 1.0;
  double trD2 = 0.5;
  std::optional<DensityFunction> expected_r;
  int quarter_turns = 0;  // number of multiplications of T by i applied after build

  int M() const { return spec.ambient_dim; }
  int N() const { return spec.corner_dim; }
  HermitianOperator X() const;
  HermitianOperator Y() const;
  bool has_symbol() const { return spec.kind != ModelKind::q_weighted; }
  // Symbol f(theta) of the Toeplitz model; throws UnsupportedModel for q_weighted.
  std::complex<double> symbol(double theta) const;
};

HyponormalModel build(const ModelSpec& spec);

// T' = iT: X' = -Y, Y' = X. Same self-commutator, principal function rotated by 90 degrees.
HyponormalModel rotated_quarter_turn(const HyponormalModel& model);

// Winding number of the symbol curve about t + i lambda, divided by 2 pi,
// from the discretized argument principle.
double winding_r(const HyponormalModel& model, double t, double lambda, int nodes = 4096);

// (1/2pi) * integral of t^p lambda^q over the region enclosed by the symbol curve.
double closed_form_moment(const HyponormalModel& model, int p, int q);

struct HyponormalityReport {
  double d2_min_eigenvalue = 0;    // smallest eigenvalue of the corner block of D2_analytic
  double corner_mismatch = 0;      // max |(-i[Y,X] - D2_analytic)_{ij}| outside the edge window
  double trace_gap = 0;            // |trace(D2_analytic) - trD2|
  double spectrum_min = 0;         // min over sigma(X) and sigma(Y)
  double spectrum_max = 0;
};

// Checks the structural assumptions; throws InvariantViolation naming the first failure.
HyponormalityReport verify_hyponormal(const HyponormalModel& model);

// Ascending eigenvalues of a Hermitian matrix of bandwidth 1.
RVector<double> tridiagonal_spectrum(const SparseOperator& band);

}  // namespace plab
