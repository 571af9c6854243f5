#include "plab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "plab/krein.hpp"
#include "plab/parallel.hpp"
#include "plab/principal.hpp"

namespace plab {

using nlohmann::json;

namespace {

constexpr double kInvarianceTolerance = 1e-12;
const std::complex<double> kMinusI(0.0, -1.0);

// ---------------------------------------------------------------- config parsing

std::string field(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(field(path, key) + ": unknown field");
}

int as_int(const json& v, const std::string& path, long long lo, long long hi) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi) {
    std::ostringstream os;
    os << path << ": " << x << " out of range [" << lo << ", " << hi << "]";
    throw ConfigError(os.str());
  }
  return static_cast<int>(x);
}

double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

std::complex<double> as_scalar(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(path + ": expected a number or [re, im]");
}

PolyFunction as_poly(const json& v, const std::string& path, double a, double b) {
  if (!v.is_array()) throw ConfigError(path + ": expected an ascending coefficient array");
  std::vector<std::complex<double>> c;
  for (std::size_t k = 0; k < v.size(); ++k) c.push_back(as_scalar(v[k], path + "[" + std::to_string(k) + "]"));
  return PolyFunction(std::move(c), a, b);
}

SeparableBivariate as_bivariate(const json& v, const std::string& path, double a, double b) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a non-empty term list");
  std::vector<SeparableBivariate::Term> terms;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    if (!v[k].is_object()) throw ConfigError(p + ": expected a term {c, alpha, psi}");
    reject_unknown(v[k], {"c", "alpha", "psi"}, p);
    const auto one = PolyFunction::constant(1.0, a, b);
    terms.push_back({v[k].contains("c") ? as_scalar(v[k]["c"], p + ".c") : 1.0,
                     v[k].contains("alpha") ? as_poly(v[k]["alpha"], p + ".alpha", a, b) : one,
                     v[k].contains("psi") ? as_poly(v[k]["psi"], p + ".psi", a, b) : one});
  }
  return SeparableBivariate(std::move(terms));
}

json scalar_json(std::complex<double> z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

json poly_json(const PolyFunction& p) {
  json out = json::array();
  for (const auto& c : p.coefficients()) out.push_back(scalar_json(c));
  if (out.empty()) out.push_back(0.0);
  return out;
}

json bivariate_json(const SeparableBivariate& f) {
  json out = json::array();
  for (const auto& t : f.terms())
    out.push_back({{"c", scalar_json(t.coefficient)}, {"alpha", poly_json(t.alpha)}, {"psi", poly_json(t.psi)}});
  return out;
}

ModelSpec as_model(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path + ": expected an object");
  reject_unknown(v, {"kind", "c", "phase", "q", "M", "N"}, path);
  ModelSpec spec;
  if (v.contains("kind")) {
    if (!v["kind"].is_string()) throw ConfigError(path + ".kind: expected a string");
    try {
      spec.kind = parse_model_kind(v["kind"].get<std::string>());
    } catch (const ValidationError& e) {
      throw ConfigError(path + ".kind: " + e.what());
    }
  }
  if (v.contains("c")) spec.c = as_real(v["c"], path + ".c");
  if (v.contains("phase")) spec.phase = as_real(v["phase"], path + ".phase");
  if (v.contains("q")) spec.q = as_real(v["q"], path + ".q");
  if (v.contains("M")) spec.ambient_dim = as_int(v["M"], path + ".M", 2, 1 << 20);
  if (v.contains("N")) spec.corner_dim = as_int(v["N"], path + ".N", 1, 1 << 20);
  return spec;
}

// Typed access to the experiment parameter map. Records the effective value of
// every parameter read, and rejects keys that were never read.
class Params {
 public:
  Params(const json& j, Experiment e) : j_(j), experiment_(e) {
    if (!j_.is_object()) throw ConfigError("parameters: expected an object");
  }

  int integer(const std::string& key, int def, int lo, int hi = 1 << 20) {
    const int v = has(key) ? as_int(j_[key], path(key), lo, hi) : def;
    effective_[key] = v;
    return v;
  }

  double real(const std::string& key, double def, double lo = 0.0) {
    const double v = has(key) ? as_real(j_[key], path(key)) : def;
    if (!(v >= lo)) throw ConfigError(path(key) + ": must be >= " + std::to_string(lo));
    effective_[key] = v;
    return v;
  }

  bool flag(const std::string& key, bool def) {
    if (has(key) && !j_[key].is_boolean()) throw ConfigError(path(key) + ": expected true or false");
    const bool v = has(key) ? j_[key].get<bool>() : def;
    effective_[key] = v;
    return v;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> def, int lo, int hi = 1 << 20) {
    if (has(key)) {
      const json& v = j_[key];
      if (!v.is_array() || v.empty()) throw ConfigError(path(key) + ": expected a non-empty integer array");
      def.clear();
      for (std::size_t k = 0; k < v.size(); ++k) def.push_back(as_int(v[k], path(key) + "[" + std::to_string(k) + "]", lo, hi));
    }
    effective_[key] = def;
    return def;
  }

  // Raw value or nullptr; the caller converts and calls set_effective.
  const json* raw(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_[key];
  }
  void set_effective(const std::string& key, json v) { effective_[key] = std::move(v); }

  std::string path(const std::string& key) const { return "parameters." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key))
        throw ConfigError(path(key) + ": unknown parameter for experiment " + to_string(experiment_));
  }

  const json& effective() const { return effective_; }

 private:
  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  json j_;
  Experiment experiment_;
  std::set<std::string> used_;
  json effective_ = json::object();
};

// ---------------------------------------------------------------- helpers

class CaseRng {
 public:
  CaseRng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    gen_.seed(seq);
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

 private:
  std::mt19937_64 gen_;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CaseRecord equal_record(int index, std::string check, std::complex<double> lhs, std::complex<double> rhs,
                        double tol, bool m_exact = false) {
  CaseRecord r;
  r.case_index = index;
  r.check = std::move(check);
  r.lhs = lhs;
  r.rhs = rhs;
  r.diff = std::abs(lhs - rhs);
  r.tolerance = tol;
  r.m_exact = m_exact;
  return r;
}

CaseRecord reported(int index, std::string check, std::complex<double> lhs, std::complex<double> rhs,
                    bool m_exact = false) {
  CaseRecord r = equal_record(index, std::move(check), lhs, rhs, 0.0, m_exact);
  r.asserted = false;
  return r;
}

HermitianOperator random_hermitian(CaseRng& rng, int n, double scale) {
  ComplexMatrix a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return HermitianOperator(ComplexMatrix((a + a.adjoint()) * (0.5 * scale / std::sqrt(double(n)))));
}

HermitianOperator random_psd(CaseRng& rng, int n, double scale) {
  ComplexMatrix b(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) b(i, j) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return HermitianOperator::hermitian_part(b * b.adjoint() * (scale / n));
}

PolyFunction random_poly(CaseRng& rng, int degree, double a = -1.0, double b = 1.0) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1);
  for (auto& x : c) x = rng.uniform(-1, 1);
  return PolyFunction::from_real(c, a, b);
}

int random_degree(CaseRng& rng, int max_degree) { return rng.integer(std::min(1, max_degree), max_degree); }

SeparableBivariate random_separable(CaseRng& rng, int terms, int degree, double a, double b) {
  std::vector<SeparableBivariate::Term> out;
  for (int k = 0; k < terms; ++k) {
    const int total = rng.integer(0, degree);
    const int da = rng.integer(0, total);
    const double c = rng.uniform(-1, 1);
    PolyFunction alpha = random_poly(rng, da, a, b);
    PolyFunction psi = random_poly(rng, total - da, a, b);
    out.push_back({c, std::move(alpha), std::move(psi)});
  }
  return SeparableBivariate(std::move(out));
}

template <typename F>
void run_cases(RunReport& report, int count, F&& one_case) {
  auto results = parallel_map(static_cast<std::size_t>(count), [&](std::size_t k) {
    Stopwatch sw;
    std::vector<CaseRecord> recs = one_case(static_cast<int>(k));
    const double wall = sw.seconds();
    for (auto& r : recs) r.wall_seconds = wall;
    return recs;
  });
  for (auto& recs : results)
    for (auto& r : recs) report.cases.push_back(std::move(r));
}

// Appends the hyponormality record; an invariant violation becomes a failing record.
bool check_model(const HyponormalModel& model, RunReport& report) {
  Stopwatch sw;
  CaseRecord r;
  r.check = "hyponormal";
  try {
    // verify_hyponormal enforces its own tolerances; the record carries the margins.
    const HyponormalityReport h = verify_hyponormal(model);
    r.lhs = h.corner_mismatch;
    r.inputs = {{"d2_min_eigenvalue", h.d2_min_eigenvalue}, {"trace_gap", h.trace_gap},
                {"spectrum_min", h.spectrum_min}, {"spectrum_max", h.spectrum_max}};
  } catch (const InvariantViolation& e) {
    r.check = "hyponormal:" + e.name();
    r.diff = 1.0;
    r.tolerance = 0.0;
    r.inputs = {{"error", e.what()}};
  }
  r.wall_seconds = sw.seconds();
  report.cases.push_back(r);
  return r.pass();
}

std::string poly_text(const PolyFunction& p) { return poly_json(p).dump(); }

// ---------------------------------------------------------------- experiments

void run_krein(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const int pairs = params.integer("pairs", 100, 1);
  const int dim = params.integer("dim", 40, 1, 4096);
  const int degree = params.integer("degree", 8, 0, 64);
  const double tol = params.real("tolerance", 1e-8);
  const double trace_tol = params.real("trace_tolerance", 1e-9);
  const int psd_every = params.integer("psd_every", 2, 1);
  params.finish();

  run_cases(report, pairs, [&](int k) {
    CaseRng rng(cfg.seed, static_cast<std::uint64_t>(k));
    const bool psd = k % psd_every == psd_every - 1;
    const HermitianOperator h0 = random_hermitian(rng, dim, 1.0);
    const HermitianOperator v = psd ? random_psd(rng, dim, 0.3) : random_hermitian(rng, dim, 0.3);
    const PolyFunction phi = random_poly(rng, random_degree(rng, degree));
    const PerturbationPair pair(h0, HermitianOperator(ComplexMatrix(h0.matrix() + v.matrix())));
    const SpectralShiftFunction xi = spectral_shift(pair);
    const KreinCheck kc = krein_check(pair, phi);
    const json inputs = {{"dim", dim}, {"psd", psd}, {"phi", poly_json(phi)}};

    std::vector<CaseRecord> recs;
    recs.push_back(equal_record(k, "krein_identity", kc.lhs, kc.rhs, tol));
    recs.push_back(equal_record(k, "trace_identity", xi.integral(), trace(v.matrix()).real(), trace_tol));
    CaseRecord bound = equal_record(k, "l1_bound", xi.abs_integral(), trace_norm(v), trace_tol);
    bound.diff = std::max(0.0, xi.abs_integral() - trace_norm(v));
    recs.push_back(bound);
    if (psd) {
      CaseRecord sign = equal_record(k, "psd_nonnegative", xi.min_value(), 0.0, 0.0);
      sign.diff = std::max(0, -xi.min_value());
      recs.push_back(sign);
    }
    for (auto& r : recs) r.inputs = inputs;
    return recs;
  });
}

void run_doi(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const int pairs = params.integer("pairs", 100, 1);
  const int dim = params.integer("dim", 30, 1, 4096);
  const int degree = params.integer("degree", 6, 0, 64);
  const double tol = params.real("tolerance", 1e-9);
  params.finish();

  run_cases(report, pairs, [&](int k) {
    CaseRng rng(cfg.seed, static_cast<std::uint64_t>(k));
    const HermitianOperator x = random_hermitian(rng, dim, 1.0);
    const HermitianOperator y = random_hermitian(rng, dim, 1.0);
    const PolyFunction psi = random_poly(rng, random_degree(rng, degree));
    const SpectralDecomposition yd = eigh(y);
    const ComplexMatrix kxy = kMinusI * commutator(y, x);
    const ComplexMatrix via_doi = doi_transform(yd, kxy, psi);
    const ComplexMatrix direct = kMinusI * commutator(polynomial_of(y.matrix(), psi), x.matrix());
    const double residual = (via_doi - direct).cwiseAbs().maxCoeff();
    double psi_norm = 0.0;
    for (Eigen::Index i = 0; i < yd.dim(); ++i) psi_norm = std::max(psi_norm, std::abs(psi(yd.eigenvalues(i))));
    const double scale = std::max(1.0, psi_norm * eigvalsh(x).cwiseAbs().maxCoeff());
    CaseRecord r = equal_record(k, "doi_identity", residual, scale, tol);
    r.diff = residual / scale;
    r.inputs = {{"dim", dim}, {"psi", poly_json(psi)}, {"scale", scale}};
    return std::vector<CaseRecord>{r};
  });
}

struct FunctionCase {
  PolyFunction psi;
  std::optional<double> expected;
};

std::vector<FunctionCase> function_list(Params& params, const std::vector<std::vector<double>>& defaults) {
  std::vector<FunctionCase> out;
  const json* v = params.raw("functions");
  if (!v) {
    for (const auto& c : defaults) out.push_back({PolyFunction::from_real(c), std::nullopt});
  } else {
    const std::string path = params.path("functions");
    if (!v->is_array() || v->empty()) throw ConfigError(path + ": expected a non-empty array");
    for (std::size_t k = 0; k < v->size(); ++k) {
      const std::string p = path + "[" + std::to_string(k) + "]";
      const json& e = (*v)[k];
      if (!e.is_object() || !e.contains("psi")) throw ConfigError(p + ": expected {\"psi\": [...], \"expected\": x}");
      reject_unknown(e, {"psi", "expected"}, p);
      FunctionCase fc{as_poly(e["psi"], p + ".psi", -1.0, 1.0), std::nullopt};
      if (e.contains("expected")) fc.expected = as_real(e["expected"], p + ".expected");
      out.push_back(fc);
    }
  }
  json eff = json::array();
  for (const auto& fc : out) {
    json e = {{"psi", poly_json(fc.psi)}};
    if (fc.expected) e["expected"] = *fc.expected;
    eff.push_back(e);
  }
  params.set_effective("functions", eff);
  return out;
}

void run_lemma1(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const auto functions = function_list(params, {{0, 1}, {0, 0, 1}, {0, 0, 0, 1}});
  std::vector<Axis> axes{Axis::y, Axis::x};
  if (const json* v = params.raw("axes")) {
    if (!v->is_array() || v->empty()) throw ConfigError(params.path("axes") + ": expected a non-empty array");
    axes.clear();
    for (const auto& a : *v) {
      if (a == "y") axes.push_back(Axis::y);
      else if (a == "x") axes.push_back(Axis::x);
      else throw ConfigError(params.path("axes") + ": axis must be \"x\" or \"y\"");
    }
  }
  json eff_axes = json::array();
  for (Axis a : axes) eff_axes.push_back(a == Axis::y ? "y" : "x");
  params.set_effective("axes", eff_axes);
  const double tol = params.real("tolerance", 1e-9);
  params.finish();

  const HyponormalModel model = build(cfg.model);
  if (!check_model(model, report)) return;
  run_cases(report, static_cast<int>(functions.size()), [&](int k) {
    const FunctionCase& fc = functions[static_cast<std::size_t>(k)];
    std::vector<CaseRecord> recs;
    for (Axis axis : axes) {
      const std::string tag = axis == Axis::y ? "y" : "x";
      const TracePair tp = lemma1_check(model, fc.psi, axis);
      recs.push_back(equal_record(k, "lemma1_" + tag, tp.lhs, tp.rhs, tol, true));
      if (fc.expected) {
        recs.push_back(equal_record(k, "lemma1_" + tag + "_lhs_expected", tp.lhs, *fc.expected, tol, true));
        recs.push_back(equal_record(k, "lemma1_" + tag + "_rhs_expected", tp.rhs, *fc.expected, tol));
      }
    }
    for (auto& r : recs) r.inputs = {{"psi", poly_json(fc.psi)}};
    return recs;
  });
}

void run_moments(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const int degree = params.integer("degree", 4, 0, 64);
  const double tol = params.real("tolerance", 1e-8);
  const double path_tol = params.real("consistency_tolerance", 1e-10);
  std::map<std::pair<int, int>, double> expected;
  if (const json* v = params.raw("expected")) {
    const std::string path = params.path("expected");
    if (!v->is_array()) throw ConfigError(path + ": expected an array of {p, q, value}");
    for (std::size_t k = 0; k < v->size(); ++k) {
      const std::string p = path + "[" + std::to_string(k) + "]";
      const json& e = (*v)[k];
      if (!e.is_object() || !e.contains("p") || !e.contains("q") || !e.contains("value"))
        throw ConfigError(p + ": expected {p, q, value}");
      reject_unknown(e, {"p", "q", "value"}, p);
      const int pp = as_int(e["p"], p + ".p", 0, degree), qq = as_int(e["q"], p + ".q", 0, degree);
      if (pp + qq > degree) throw ConfigError(p + ": p + q exceeds parameters.degree");
      expected[{pp, qq}] = as_real(e["value"], p + ".value");
    }
    params.set_effective("expected", *v);
  }
  const HyponormalModel model = build(cfg.model);
  const bool closed = params.flag("closed_form", model.has_symbol());
  params.finish();
  if (closed && !model.has_symbol())
    throw ConfigError("parameters.closed_form: model " + to_string(model.spec.kind) + " has no closed-form moments");

  if (!check_model(model, report)) return;
  const MomentTable table = moment_table(model, degree);
  std::vector<std::pair<int, int>> idx;
  for (const auto& [pq, value] : table.entries) idx.push_back(pq);
  std::sort(idx.begin(), idx.end(), [](auto l, auto r) {
    return l.first + l.second != r.first + r.second ? l.first + l.second < r.first + r.second : l.first > r.first;
  });

  Table out{"moments", {"p", "q", "operator", "closed_form"}, {}};
  run_cases(report, static_cast<int>(idx.size()), [&](int k) {
    const auto [p, q] = idx[static_cast<std::size_t>(k)];
    const double mu = table.at(p, q);
    std::vector<CaseRecord> recs;
    if (closed) recs.push_back(equal_record(k, "moment_closed_form", mu, closed_form_moment(model, p, q), tol, true));
    else recs.push_back(reported(k, "moment", mu, 0.0, true));
    if (const auto it = expected.find({p, q}); it != expected.end())
      recs.push_back(equal_record(k, "moment_expected", mu, it->second, tol, true));
    const auto lam = PolyFunction::monomial(q + 1, model.a, model.b) * std::complex<double>(1.0 / (q + 1));
    const auto t = PolyFunction::monomial(p + 1, model.a, model.b) * std::complex<double>(1.0 / (p + 1));
    const auto two_path = generalized_trace_lhs(model, SeparableBivariate::in_lambda(lam), SeparableBivariate::in_t(t));
    recs.push_back(equal_record(k, "moment_two_paths", mu, two_path, path_tol, true));
    for (auto& r : recs) r.inputs = {{"p", p}, {"q", q}};
    return recs;
  });
  for (const auto& [p, q] : idx)
    out.rows.push_back({static_cast<long long>(p), static_cast<long long>(q), table.at(p, q),
                        closed ? Cell(closed_form_moment(model, p, q)) : Cell(std::string())});
  report.tables.push_back(std::move(out));
}

void run_formula(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const HyponormalModel model = build(cfg.model);
  std::optional<SeparableBivariate> fixed_psi, fixed_phi;
  if (const json* v = params.raw("psi")) fixed_psi = as_bivariate(*v, params.path("psi"), model.a, model.b);
  if (const json* v = params.raw("phi")) fixed_phi = as_bivariate(*v, params.path("phi"), model.a, model.b);
  if (fixed_psi.has_value() != fixed_phi.has_value())
    throw ConfigError("parameters: psi and phi must be given together");
  if (fixed_psi) {
    params.set_effective("psi", bivariate_json(*fixed_psi));
    params.set_effective("phi", bivariate_json(*fixed_phi));
  }
  const int pairs = fixed_psi ? 1 : params.integer("pairs", 20, 1);
  const int degree = params.integer("degree", 6, 0, 32);
  const int terms = params.integer("terms", 2, 1, 16);
  const int grid = params.integer("grid", 201, 1, 4001);
  const double tol = params.real("tolerance", 1e-8);
  const double grid_tol = params.real("grid_tolerance", 5e-3);
  const double collapse_tol = params.real("collapse_tolerance", 1e-9);
  const double trace_tol = params.real("trace_tolerance", 1e-10);
  const bool identical = params.flag("identical", false);
  const bool collapse = params.flag("collapse", true);
  params.finish();

  if (!check_model(model, report)) return;
  // Without a symbol curve the rhs pairs -J with the operator moments instead.
  const bool closed = model.has_symbol();
  run_cases(report, pairs, [&](int k) {
    CaseRng rng(cfg.seed, static_cast<std::uint64_t>(k));
    const SeparableBivariate psi = fixed_psi ? *fixed_psi : random_separable(rng, terms, degree, model.a, model.b);
    const SeparableBivariate phi =
        identical ? psi : (fixed_phi ? *fixed_phi : random_separable(rng, terms, degree, model.a, model.b));
    std::vector<CaseRecord> recs;
    const auto lhs = generalized_trace_lhs(model, psi, phi);
    std::complex<double> rhs;
    if (closed) {
      rhs = generalized_trace_rhs_exact(model, psi, phi);
    } else {
      const Eigen::MatrixXcd g = coefficient_grid(-jacobian(psi, phi));
      for (Eigen::Index p = 0; p < g.rows(); ++p)
        for (Eigen::Index q = 0; q < g.cols(); ++q)
          if (g(p, q) != 0.0) rhs += g(p, q) * moment(model, static_cast<int>(p), static_cast<int>(q));
    }
    recs.push_back(equal_record(k, closed ? "formula_exact" : "formula_moments", lhs, rhs, tol, true));
    if (model.expected_r) {
      const auto grid_rhs = generalized_trace_rhs(psi, phi, *model.expected_r, grid);
      recs.push_back(equal_record(k, "formula_grid", lhs, grid_rhs, grid_tol, true));
      if (identical) recs.push_back(equal_record(k, "formula_grid_zero", grid_rhs, 0.0, tol));
    }
    if (identical) {
      recs.push_back(equal_record(k, "formula_lhs_zero", lhs, 0.0, tol, true));
      recs.push_back(equal_record(k, "formula_rhs_zero", rhs, 0.0, tol));
    }
    std::complex<double> split = 0.0;
    for (const auto& a : psi.terms())
      for (const auto& b : phi.terms())
        split += generalized_trace_lhs(model, SeparableBivariate::single(a.coefficient, a.alpha, a.psi),
                                       SeparableBivariate::single(b.coefficient, b.alpha, b.psi));
    recs.push_back(equal_record(k, "formula_bilinear", lhs, split, trace_tol, true));
    json inputs = {{"psi", bivariate_json(psi)}, {"phi", bivariate_json(phi)}};
    if (collapse) {
      const int d1 = rng.integer(0, degree), d2 = rng.integer(0, degree);
      const int da = rng.integer(0, d1), dp = rng.integer(0, d2);
      const PolyFunction alpha = random_poly(rng, da), psi1 = random_poly(rng, d1 - da);
      const PolyFunction phi1 = random_poly(rng, dp), beta = random_poly(rng, d2 - dp);
      const CollapseCheck cc = collapse_check(model, alpha, psi1, phi1, beta);
      recs.push_back(equal_record(k, "collapse_full_trace", cc.full_trace_residual, 0.0, trace_tol));
      recs.push_back(equal_record(k, "collapse_split", cc.lhs_direct, cc.lhs_split, collapse_tol, true));
      inputs["collapse"] = {{"alpha", poly_json(alpha)}, {"psi", poly_json(psi1)},
                            {"phi", poly_json(phi1)}, {"beta", poly_json(beta)}};
    }
    for (auto& r : recs) r.inputs = inputs;
    return recs;
  });
}

void run_reconstruct(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const int degree = params.integer("degree", 8, 0, 32);
  const int grid = params.integer("grid", 101, 1, 2001);
  const double tol = params.real("tolerance", 1e-9);
  const double center_tol = params.real("center_tolerance", 0.03);
  const double l1_tol = params.real("l1_tolerance", 0.05);
  const std::vector<int> trend = params.integers("trend_degrees", {4, 6, 8}, 0, 32);
  params.finish();

  const HyponormalModel model = build(cfg.model);
  if (!check_model(model, report)) return;
  int top = degree;
  for (int d : trend) top = std::max(top, d);
  const MomentTable table = moment_table(model, 2 * top);
  const PrincipalFunctionEstimate est = reconstruct_r(table, degree, grid);
  const double tc = 0.5 * (model.a + model.b);
  const json inputs = {{"degree", degree}, {"grid", grid}};

  std::vector<CaseRecord> recs;
  recs.push_back(equal_record(0, "integral", est.integral(), model.trD2, tol, true));
  double worst = 0.0;
  for (int p = 0; p <= degree; ++p)
    for (int q = 0; q <= degree; ++q) worst = std::max(worst, std::abs(est.moment(p, q) - table.at(p, q)));
  recs.push_back(equal_record(0, "matched_moments", worst, 0.0, tol));
  recs.push_back(reported(0, "min_value", est.min_value(), 0.0, true));
  Table trend_table{"l1_trend", {"degree", "l1_mass", "relative_error"}, {}};
  if (model.expected_r) {
    const double rc = reconstruct_at(table, degree, tc, tc);
    recs.push_back(equal_record(0, "center_value", rc, (*model.expected_r)(tc, tc), center_tol, true));
    CaseRecord l1 = equal_record(0, "l1_mass", est.l1_mass, model.trD2, l1_tol, true);
    l1.diff = std::abs(est.l1_mass - model.trD2) / model.trD2;
    recs.push_back(l1);

    // |l1_mass - Tr D^2| must not grow along the degree sequence.
    double previous = std::numeric_limits<double>::infinity(), growth = 0.0;
    for (int d : trend) {
      const double m = reconstruct_r(table, d, grid).l1_mass;
      const double rel = std::abs(m - model.trD2) / model.trD2;
      trend_table.rows.push_back({static_cast<long long>(d), m, rel});
      if (std::isfinite(previous)) growth = std::max(growth, rel - previous);
      previous = rel;
    }
    CaseRecord mono = equal_record(0, "l1_trend_monotone", growth, 0.0, 0.0, true);
    mono.diff = std::max(0.0, growth);
    recs.push_back(mono);
  }
  for (auto& r : recs) r.inputs = inputs;
  for (auto& r : recs) report.cases.push_back(std::move(r));

  Table values{"reconstruction", {"t", "lambda", "r_hat"}, {}};
  if (model.expected_r) values.columns.push_back("expected_r");
  for (Eigen::Index i = 0; i < est.values.rows(); ++i)
    for (Eigen::Index j = 0; j < est.values.cols(); ++j) {
      std::vector<Cell> row{est.t_grid.nodes(i), est.lambda_grid.nodes(j), est.values(i, j)};
      if (model.expected_r) row.emplace_back((*model.expected_r)(est.t_grid.nodes(i), est.lambda_grid.nodes(j)));
      values.rows.push_back(std::move(row));
    }
  report.tables.push_back(std::move(values));
  if (!trend_table.rows.empty()) report.tables.push_back(std::move(trend_table));
}

// Integral of r over [t0,t1] x [l0,l1], weighted by w(lambda).
double density_integral(const DensityFunction& r, double t0, double t1, double l0, double l1, int grid,
                        const std::function<double(double)>& w) {
  const auto rt = gauss_legendre(grid, t0, t1);
  const auto rl = gauss_legendre(grid, l0, l1);
  double s = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) s += rt.weights(i) * rl.weights(j) * w(rl.nodes(j)) * r(rt.nodes(i), rl.nodes(j));
  return s;
}

void slice_table(RunReport& report, const std::string& name, const SpectralShiftFunction& xi) {
  Table t{name, {"lower", "upper", "value"}, {}};
  const auto& bp = xi.breakpoints();
  for (std::size_t k = 0; k < xi.values().size(); ++k)
    t.rows.push_back({bp[k], bp[k + 1], static_cast<long long>(xi.values()[k])});
  report.tables.push_back(std::move(t));
}

void run_ssf_slice(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const HyponormalModel model = build(cfg.model);
  PolyFunction psi = PolyFunction::identity(model.a, model.b);
  if (const json* v = params.raw("psi")) psi = as_poly(*v, params.path("psi"), model.a, model.b);
  if (!psi.is_real()) throw ConfigError(params.path("psi") + ": slice functions must be real");
  params.set_effective("psi", poly_json(psi));
  PolyFunction phi = PolyFunction::monomial(2, model.a, model.b);
  if (const json* v = params.raw("phi")) phi = as_poly(*v, params.path("phi"), model.a, model.b);
  if (!phi.is_real()) throw ConfigError(params.path("phi") + ": slice functions must be real");
  params.set_effective("phi", poly_json(phi));
  const int bins = params.integer("bins", 7, 1, 256);
  const double fraction = params.real("window_fraction", 0.1);
  if (fraction >= 0.5) throw ConfigError(params.path("window_fraction") + ": must be < 0.5");
  const int ramp_degree = params.integer("ramp_degree", 64, 1, 4096);
  const int reference_degree = params.integer("reference_degree", 8, 0, 32);
  const int compression = params.integer("compression", model.M() / 2, 0, model.M());
  const int grid = params.integer("grid", 201, 1, 4001);
  const double tol = params.real("tolerance", 1e-9);
  params.finish();

  if (!check_model(model, report)) return;
  const auto window = interior_window(model, fraction);
  const json base = {{"psi", poly_json(psi)}, {"phi", poly_json(phi)}, {"window", {window.first, window.second}}, {"compression", compression}};
  const PolyFunction dpsi = derivative(psi);
  Stopwatch sw;

  // Null-sum law on the full ambient space; the compressed slices carry the defect.
  const SsfSlice xi = xi_slice(model, psi);
  const SsfSlice eta = eta_slice(model, psi);
  std::vector<CaseRecord> recs;
  recs.push_back(equal_record(0, "xi_null_sum", xi.total_integral, 0.0, tol));
  recs.push_back(equal_record(0, "eta_null_sum", eta.total_integral, 0.0, tol));
  // Windowed pairing with phi' against the corner trace of -i[psi(Y), phi(X)].
  const std::complex<double> pairing_ref =
      generalized_trace_lhs(model, SeparableBivariate::in_lambda(psi), SeparableBivariate::in_t(phi));
  recs.push_back(reported(0, "xi_window_pairing", xi.shift.pair_with(phi, window.first, window.second), pairing_ref));
  slice_table(report, "xi_slice", xi.shift);
  if (compression > 0) {
    const SsfSlice xc = xi_slice(model, psi, compression);
    const SsfSlice ec = eta_slice(model, psi, compression);
    recs.push_back(reported(0, "xi_compressed_total", xc.total_integral, lemma1_check(model, psi, Axis::y).rhs));
    recs.push_back(reported(0, "eta_compressed_total", ec.total_integral, lemma1_check(model, psi, Axis::x).rhs));
    recs.push_back(reported(0, "xi_compressed_min", xc.shift.min_value(), 0.0));
    recs.push_back(
        reported(0, "xi_compressed_window_pairing", xc.shift.pair_with(phi, window.first, window.second), pairing_ref));
    if (model.expected_r)
      recs.push_back(reported(0, "xi_compressed_window", xc.shift.integral_over(window.first, window.second),
                              density_integral(*model.expected_r, window.first, window.second, model.a, model.b, grid,
                                               [&dpsi](double l) { return dpsi.real_at(l); })));
    slice_table(report, "xi_slice_compressed", xc.shift);
  }
  for (auto& r : recs) {
    r.inputs = base;
    r.wall_seconds = sw.seconds();
  }
  for (auto& r : recs) report.cases.push_back(std::move(r));

  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) edges[static_cast<std::size_t>(k)] = model.a + (model.b - model.a) * k / bins;
  edges.back() = model.b;
  Stopwatch sw2;
  const BinnedEstimate binned = ssf_binned_r(model, edges, edges, window, ramp_degree, compression);
  std::optional<MomentTable> moments;
  if (reference_degree > 0) moments = moment_table(model, 2 * reference_degree);
  const double wall = sw2.seconds();

  Table cells{"binned", {"t", "lambda", "estimate", "expected_r", "projection"}, {}};
  const auto& e = binned.estimate;
  for (Eigen::Index i = 0; i < e.values.rows(); ++i)
    for (Eigen::Index j = 0; j < e.values.cols(); ++j) {
      const double t = e.t_grid.nodes(i), l = e.lambda_grid.nodes(j);
      cells.rows.push_back({t, l, e.values(i, j), model.expected_r ? Cell((*model.expected_r)(t, l)) : Cell(std::string()),
                            moments ? Cell(reconstruct_at(*moments, reference_degree, t, l)) : Cell(std::string())});
    }
  report.tables.push_back(std::move(cells));

  std::vector<CaseRecord> bin_recs;
  for (std::size_t j = 0; j < binned.null_sums.size(); ++j) {
    CaseRecord r;
    if (compression == 0) {
      r = equal_record(static_cast<int>(j), "binned_null_sum", binned.null_sums[j], 0.0, tol);
    } else {
      // Mass of r in the strip, against the compressed slice total.
      const double strip = model.expected_r ? density_integral(*model.expected_r, model.a, model.b, edges[j],
                                                               edges[j + 1], grid, [](double) { return 1.0; })
                                            : 0.0;
      r = reported(static_cast<int>(j), "binned_strip_total", binned.null_sums[j], strip);
    }
    r.inputs = {{"lambda_bin", {edges[j], edges[j + 1]}}};
    bin_recs.push_back(r);
  }
  // Bin containing the centre of [a,b]^2, and the cross-estimator discrepancy over interior bins.
  const double c = 0.5 * (model.a + model.b);
  const auto centre_bin = static_cast<Eigen::Index>(std::min<double>(bins - 1, std::floor((c - model.a) / (model.b - model.a) * bins)));
  if (model.expected_r) {
    CaseRecord r = reported(0, "binned_center", e.values(centre_bin, centre_bin),
                            (*model.expected_r)(e.t_grid.nodes(centre_bin), e.lambda_grid.nodes(centre_bin)));
    r.inputs = {{"t", e.t_grid.nodes(centre_bin)}, {"lambda", e.lambda_grid.nodes(centre_bin)}};
    bin_recs.push_back(r);
  }
  if (moments) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < e.values.rows(); ++i) {
      if (edges[static_cast<std::size_t>(i)] < window.first || edges[static_cast<std::size_t>(i) + 1] > window.second) continue;
      for (Eigen::Index j = 0; j < e.values.cols(); ++j)
        worst = std::max(worst, std::abs(e.values(i, j) - reconstruct_at(*moments, reference_degree, e.t_grid.nodes(i),
                                                                          e.lambda_grid.nodes(j))));
    }
    CaseRecord r = reported(0, "binned_vs_projection", worst, 0.0);
    r.inputs = {{"reference_degree", reference_degree}};
    bin_recs.push_back(r);
  }
  for (auto& r : bin_recs) {
    r.wall_seconds = wall;
    r.inputs["bins"] = bins;
    r.inputs["compression"] = compression;
    report.cases.push_back(std::move(r));
  }
}

void run_positivity(const ExperimentConfig& cfg, Params& params, RunReport& report) {
  const auto functions = function_list(params, {{0, 1}, {0, -1}, {0, 0, 0, 1}});
  const double tol = params.real("tolerance", 1e-10);
  params.finish();

  const HyponormalModel model = build(cfg.model);
  if (!check_model(model, report)) return;
  Table out{"positivity", {"psi", "degree", "eigmin"}, {}};
  std::vector<double> mins(functions.size());
  run_cases(report, static_cast<int>(functions.size()), [&](int k) {
    const FunctionCase& fc = functions[static_cast<std::size_t>(k)];
    const double m = positivity_probe(model, fc.psi);
    mins[static_cast<std::size_t>(k)] = m;
    std::vector<CaseRecord> recs;
    if (fc.psi.degree() <= 1) {
      // Linear psi: the corner block is slope * D^2, so its sign is known.
      const double slope = fc.psi.coefficient(1).real();
      CaseRecord r = equal_record(k, slope >= 0 ? "positivity_sign_nonnegative" : "positivity_sign_nonpositive", m, 0.0,
                                  tol, true);
      r.diff = slope >= 0 ? std::max(0.0, -m) : std::max(0.0, m);
      recs.push_back(r);
    } else {
      recs.push_back(reported(k, "positivity_probe", m, 0.0, true));
    }
    if (fc.expected) recs.push_back(equal_record(k, "positivity_expected", m, *fc.expected, tol, true));
    for (auto& r : recs) r.inputs = {{"psi", poly_json(fc.psi)}};
    return recs;
  });
  for (std::size_t k = 0; k < functions.size(); ++k)
    out.rows.push_back({poly_text(functions[k].psi), static_cast<long long>(functions[k].psi.degree()), mins[k]});
  report.tables.push_back(std::move(out));
}

// ---------------------------------------------------------------- output

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return csv_escape(std::get<std::string>(c));
}

Table cases_table(const RunReport& report) {
  Table t{"cases",
          {"case", "check", "asserted", "pass", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "diff", "tolerance", "inputs"},
          {}};
  for (const auto& r : report.cases)
    t.rows.push_back({static_cast<long long>(r.case_index), r.check, static_cast<long long>(r.asserted),
                      static_cast<long long>(r.pass()), r.lhs.real(), r.lhs.imag(), r.rhs.real(), r.rhs.imag(), r.diff,
                      r.tolerance, r.inputs.dump()});
  return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
  if (!f) throw ConfigError("failed writing " + path.string());
}

}  // namespace

// ---------------------------------------------------------------- public API

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::krein: return "krein";
    case Experiment::doi: return "doi";
    case Experiment::lemma1: return "lemma1";
    case Experiment::moments: return "moments";
    case Experiment::formula: return "formula";
    case Experiment::reconstruct: return "reconstruct";
    case Experiment::ssf_slice: return "ssf-slice";
    case Experiment::positivity: return "positivity";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (Experiment e : {Experiment::krein, Experiment::doi, Experiment::lemma1, Experiment::moments, Experiment::formula,
                       Experiment::reconstruct, Experiment::ssf_slice, Experiment::positivity})
    if (to_string(e) == name) return e;
  throw ConfigError("unknown experiment '" + name +
                    "' (expected krein|doi|lemma1|moments|formula|reconstruct|ssf-slice|positivity)");
}

bool is_banded_exact(Experiment e) {
  return e == Experiment::lemma1 || e == Experiment::moments || e == Experiment::formula ||
         e == Experiment::reconstruct || e == Experiment::positivity;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j, {"schema_version", "experiment", "model", "parameters", "seed", "output_dir", "sweep"}, "");
  ExperimentConfig cfg;
  if (!j.contains("schema_version")) throw ConfigError("schema_version: required");
  cfg.schema_version = as_int(j["schema_version"], "schema_version", kSchemaVersion, kSchemaVersion);
  if (j.contains("experiment")) {
    if (!j["experiment"].is_string()) throw ConfigError("experiment: expected a string");
    try {
      cfg.experiment = parse_experiment(j["experiment"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("experiment: ") + e.what());
    }
    cfg.experiment_given = true;
  }
  if (j.contains("model")) cfg.model = as_model(j["model"], "model");
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object()) throw ConfigError("parameters: expected an object");
    cfg.parameters = j["parameters"];
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("output_dir: expected a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("sweep")) {
    if (!j["sweep"].is_array()) throw ConfigError("sweep: expected an array of M values");
    if (j["sweep"].empty()) throw ConfigError("sweep: M list is empty");
    for (std::size_t k = 0; k < j["sweep"].size(); ++k)
      cfg.sweep.push_back(as_int(j["sweep"][k], "sweep[" + std::to_string(k) + "]", 2, 1 << 20));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config(os.str());
}

json to_json(const ModelSpec& spec) {
  return {{"kind", to_string(spec.kind)}, {"c", spec.c}, {"phase", spec.phase}, {"q", spec.q},
          {"M", spec.ambient_dim}, {"N", spec.corner_dim}};
}

int RunReport::failures() const {
  return static_cast<int>(std::count_if(cases.begin(), cases.end(), [](const CaseRecord& r) { return !r.pass(); }));
}

int RunReport::asserted_count() const {
  return static_cast<int>(std::count_if(cases.begin(), cases.end(), [](const CaseRecord& r) { return r.asserted; }));
}

double RunReport::max_diff() const {
  double m = 0.0;
  for (const auto& r : cases)
    if (r.asserted) m = std::max(m, r.diff);
  return m;
}

RunReport run(const ExperimentConfig& config) {
  RunReport report;
  report.experiment = config.experiment;
  report.model = config.model;
  report.seed = config.seed;
  Params params(config.parameters, config.experiment);
  switch (config.experiment) {
    case Experiment::krein: run_krein(config, params, report); break;
    case Experiment::doi: run_doi(config, params, report); break;
    case Experiment::lemma1: run_lemma1(config, params, report); break;
    case Experiment::moments: run_moments(config, params, report); break;
    case Experiment::formula: run_formula(config, params, report); break;
    case Experiment::reconstruct: run_reconstruct(config, params, report); break;
    case Experiment::ssf_slice: run_ssf_slice(config, params, report); break;
    case Experiment::positivity: run_positivity(config, params, report); break;
  }
  report.parameters = params.effective();
  return report;
}

RunReport sweep(const ExperimentConfig& config, const std::vector<int>& m_list) {
  if (m_list.empty()) throw ConfigError("sweep: M list is empty");
  for (std::size_t k = 1; k < m_list.size(); ++k)
    if (m_list[k] <= m_list[k - 1]) throw ConfigError("sweep: M list must be strictly ascending");
  if (config.experiment == Experiment::krein || config.experiment == Experiment::doi)
    throw ConfigError("sweep: experiment " + to_string(config.experiment) + " does not depend on the model dimension");

  std::vector<RunReport> runs;
  for (int m : m_list) {
    ExperimentConfig c = config;
    c.model.ambient_dim = m;
    c.sweep.clear();
    runs.push_back(run(c));
  }

  RunReport out;
  out.experiment = config.experiment;
  out.model = config.model;
  out.seed = config.seed;
  out.parameters = runs.front().parameters;
  out.sweep = m_list;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    for (CaseRecord r : runs[k].cases) {
      r.inputs["M"] = m_list[k];
      out.cases.push_back(std::move(r));
    }
    for (Table t : runs[k].tables) {
      t.name = "M" + std::to_string(m_list[k]) + "_" + t.name;
      out.tables.push_back(std::move(t));
    }
  }

  // Cases line up by position: each run issues the same records in the same order.
  const auto& first = runs.front().cases;
  for (std::size_t k = 1; k < runs.size(); ++k) {
    const auto& cur = runs[k].cases;
    if (cur.size() != first.size()) throw InvariantViolation("sweep_alignment", "runs produced different case lists");
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (cur[i].check != first[i].check || cur[i].case_index != first[i].case_index)
        throw InvariantViolation("sweep_alignment", "case " + std::to_string(i) + " differs between runs");
      if (!first[i].m_exact) continue;
      CaseRecord r = equal_record(first[i].case_index, "m_invariance:" + first[i].check, cur[i].lhs, first[i].lhs,
                                  kInvarianceTolerance);
      r.inputs = {{"M", m_list[k]}, {"M0", m_list.front()}};
      out.cases.push_back(std::move(r));
    }
  }

  // Trend table keyed by (M, N); monotone = |lhs - rhs| non-increasing in M.
  Table trend{"sweep", {"case", "check", "M", "N", "lhs_re", "lhs_im", "rhs_re", "diff", "monotone"}, {}};
  for (std::size_t i = 0; i < first.size(); ++i) {
    bool monotone = true;
    for (std::size_t k = 1; k < runs.size(); ++k)
      if (runs[k].cases[i].diff > runs[k - 1].cases[i].diff) monotone = false;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const CaseRecord& r = runs[k].cases[i];
      trend.rows.push_back({static_cast<long long>(r.case_index), r.check, static_cast<long long>(m_list[k]),
                            static_cast<long long>(config.model.corner_dim), r.lhs.real(), r.lhs.imag(), r.rhs.real(),
                            r.diff, static_cast<long long>(monotone)});
    }
  }
  out.tables.push_back(std::move(trend));
  return out;
}

std::string summary_json(const RunReport& report) {
  json cases = json::array();
  for (const auto& r : report.cases)
    cases.push_back({{"case", r.case_index},
                     {"check", r.check},
                     {"inputs", r.inputs},
                     {"lhs", {r.lhs.real(), r.lhs.imag()}},
                     {"rhs", {r.rhs.real(), r.rhs.imag()}},
                     {"diff", r.diff},
                     {"tolerance", r.tolerance},
                     {"asserted", r.asserted},
                     {"pass", r.pass()}});
  json tables = json::array();
  for (const auto& t : report.tables) tables.push_back(t.name + ".csv");
  json j = {{"schema_version", kSchemaVersion},
            {"experiment", to_string(report.experiment)},
            {"model", to_json(report.model)},
            {"model_id", report.model.id()},
            {"seed", report.seed},
            {"parameters", report.parameters},
            {"sweep", report.sweep},
            {"cases", cases},
            {"tables", tables},
            {"summary",
             {{"records", report.cases.size()},
              {"asserted", report.asserted_count()},
              {"failures", report.failures()},
              {"max_diff", report.max_diff()},
              {"passed", report.passed()}}}};
  return j.dump(2) + "\n";
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t k = 0; k < table.columns.size(); ++k) out += (k ? "," : "") + csv_escape(table.columns[k]);
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + cell_text(row[k]);
    out += "\n";
  }
  return out;
}

void write_report(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  const fs::path root(dir);
  write_text(root / "summary.json", summary_json(report));
  write_text(root / "cases.csv", to_csv(cases_table(report)));
  for (const auto& t : report.tables) write_text(root / (t.name + ".csv"), to_csv(t));
  Table timing{"timing", {"case", "check", "wall_seconds"}, {}};
  for (const auto& r : report.cases)
    timing.rows.push_back({static_cast<long long>(r.case_index), r.check, r.wall_seconds});
  write_text(root / "timing.csv", to_csv(timing));
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trace-formula experiments on truncated hyponormal operator models", "principal-lab"};
  std::string experiment, config_path, model_kind, out_dir, sweep_text;
  int m = 0, n = 0, degree = 0;
  std::uint64_t seed = 0;
  app.add_option("experiment", experiment, "krein|doi|lemma1|moments|formula|reconstruct|ssf-slice|positivity")
      ->required();
  app.add_option("--config", config_path, "JSON experiment config")->required();
  auto* model_opt = app.add_option("--model", model_kind, "shift|elliptic|qweighted");
  auto* m_opt = app.add_option("--M", m, "ambient dimension");
  auto* n_opt = app.add_option("--N", n, "corner window");
  auto* degree_opt = app.add_option("--degree", degree, "overrides parameters.degree");
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized suites");
  auto* out_opt = app.add_option("--out", out_dir, "report directory");
  auto* sweep_opt = app.add_option("--sweep", sweep_text, "comma-separated ascending M list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  try {
    const Experiment e = parse_experiment(experiment);
    cfg = load_config(config_path);
    if (cfg.experiment_given && cfg.experiment != e)
      throw ConfigError("experiment: config declares " + to_string(cfg.experiment) + " but the command line asks for " +
                        to_string(e));
    cfg.experiment = e;
    if (model_opt->count()) cfg.model.kind = parse_model_kind(model_kind);
    if (m_opt->count()) cfg.model.ambient_dim = m;
    if (n_opt->count()) cfg.model.corner_dim = n;
    if (degree_opt->count()) cfg.parameters["degree"] = degree;
    if (seed_opt->count()) cfg.seed = seed;
    if (out_opt->count()) cfg.output_dir = out_dir;
    if (sweep_opt->count()) {
      cfg.sweep.clear();
      std::stringstream ss(sweep_text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
          v = std::stoi(item, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != item.size()) throw ConfigError("--sweep: '" + item + "' is not an integer");
        cfg.sweep.push_back(v);
      }
      if (cfg.sweep.empty()) throw ConfigError("sweep: M list is empty");
    }
    cfg.model.validate();
    for (int v : cfg.sweep) {
      ModelSpec s = cfg.model;
      s.ambient_dim = v;
      s.validate();
    }
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  RunReport report;
  try {
    report = cfg.sweep.empty() ? run(cfg) : sweep(cfg, cfg.sweep);
    write_report(report, cfg.output_dir);
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const WindowTooSmall& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const UnsupportedModel& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 1;
  }

  char line[256];
  std::snprintf(line, sizeof line, "%s on %s: %zu records, %d asserted, %d failed, max diff %.3e\n",
                to_string(report.experiment).c_str(), report.model.id().c_str(), report.cases.size(),
                report.asserted_count(), report.failures(), report.max_diff());
  out << line;
  int shown = 0;
  for (const auto& r : report.cases) {
    if (r.pass()) continue;
    if (shown++ == 20) {
      out << "  ...\n";
      break;
    }
    std::snprintf(line, sizeof line, "  FAIL %s case %d: diff %.3e > tolerance %.3e\n", r.check.c_str(), r.case_index,
                  r.diff, r.tolerance);
    out << line;
  }
  out << "report written to " << cfg.output_dir << "\n";
  return report.passed() ? 0 : 1;
}

}  // namespace plab
