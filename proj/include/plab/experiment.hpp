#pragma once

// Experiment runner: JSON configs in, summary.json plus CSV tables out.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "plab/errors.hpp"
#include "plab/models.hpp"

namespace plab {

// Malformed or inconsistent configuration; maps to exit status 2.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

inline constexpr int kSchemaVersion = 1;

enum class Experiment { krein, doi, lemma1, moments, formula, reconstruct, ssf_slice, positivity };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);
// Experiments whose asserted quantities are exact corner traces, hence M-invariant.
bool is_banded_exact(Experiment e);

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  Experiment experiment = Experiment::moments;
  bool experiment_given = false;  // the config file named its experiment
  ModelSpec model;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string output_dir = "principal-lab-out";
  std::vector<int> sweep;  // empty: single run
};

// Throws ConfigError with a line/column or field-path diagnostic.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ModelSpec& spec);

struct CaseRecord {
  int case_index = 0;
  std::string check;
  nlohmann::json inputs = nlohmann::json::object();
  std::complex<double> lhs;
  std::complex<double> rhs;
  double diff = 0;       // the quantity compared against tolerance
  double tolerance = 0;
  bool asserted = true;  // false: reported only
  bool m_exact = false;  // lhs is expected to be invariant under M
  double wall_seconds = 0;

  bool pass() const { return !asserted || diff <= tolerance; }
};

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct RunReport {
  Experiment experiment = Experiment::moments;
  ModelSpec model;
  std::uint64_t seed = 0;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<int> sweep;
  std::vector<CaseRecord> cases;
  std::vector<Table> tables;

  int failures() const;
  int asserted_count() const;
  double max_diff() const;  // over asserted records
  bool passed() const { return failures() == 0; }
};

RunReport run(const ExperimentConfig& config);
// Repeats the experiment for each M (strictly ascending); banded-exact lhs
// values are asserted M-invariant within 1e-12, other quantities become trend columns.
RunReport sweep(const ExperimentConfig& config, const std::vector<int>& m_list);

// Deterministic: no wall-time fields.
std::string summary_json(const RunReport& report);
// "%.16e" for reals.
std::string to_csv(const Table& table);
// summary.json, one CSV per table, cases.csv, and timing.csv (the only file with wall times).
void write_report(const RunReport& report, const std::string& dir);

// principal-lab <experiment> --config <file> [--model ...] [--M n] [--N n]
//   [--degree d] [--seed s] [--out dir] [--sweep M1,M2,...]
// Returns 0 pass, 1 assertion failure, 2 config error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace plab
