#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "qs/integrand.hpp"
#include "qs/mesh.hpp"
#include "qs/shape_solver.hpp"
#include "qs/state_solver.hpp"

namespace qs {

enum class ScenarioKind { eigen, torsion, solve_aux, counterexample, geometry, sweep, check };

std::string kind_name(ScenarioKind k);
std::optional<ScenarioKind> parse_kind(const std::string& name);

/// A nodal input: a constant, a field dump (`file:PATH`) or an expression in
/// x, y (`expr:TEXT`).
struct SourceSpec {
  enum class Kind { constant, file, expression } kind = Kind::constant;
  double value = 0.0;
  std::string text;  // path or expression

  static SourceSpec constant(double v) { return {Kind::constant, v, {}}; }
  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

/// Nodal field on g; file sources must match the grid.
ScalarField materialize(const SourceSpec& s, const GridSpec& g);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::eigen;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string output;  // name of the primary artifact; empty selects the per-kind default

  struct Grid {
    std::array<double, 2> origin{0.0, 0.0};
    std::array<double, 2> extent{1.0, 1.0};
    std::size_t cells = 64;
    friend bool operator==(const Grid&, const Grid&) = default;
  } grid;

  struct Integrand {
    std::string kind = "dirichlet";
    double p = 2.0;
    SourceSpec g = SourceSpec::constant(1.0);
    SourceSpec lam = SourceSpec::constant(0.0);
    friend bool operator==(const Integrand&, const Integrand&) = default;
  } integrand;

  struct Solver {
    std::string method = "newton";  // newton | nlcg
    double tol = 1e-10;
    double step_tol = 1e-12;
    std::size_t max_iter = 20000;
    std::vector<double> deltas{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    friend bool operator==(const Solver&, const Solver&) = default;
  } solver;

  struct Aux {
    std::vector<double> sigmas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    double tau = 1e-7;
    std::size_t rounds = 50;
    std::size_t stage_max_iter = 10;
    double tol_flip = 1e-10;
    std::size_t patch_radius = 3;
    bool prune = true;
    friend bool operator==(const Aux&, const Aux&) = default;
  } aux;

  struct Eigen {
    double tol = 1e-4;
    std::size_t max_iter = 50000;
    friend bool operator==(const Eigen&, const Eigen&) = default;
  } eigen;

  struct Target {
    std::string shape = "disc";  // disc | annulus | slit | square | full | file
    std::optional<std::array<double, 2>> center;  // box centre when unset
    double radius = 1.0;
    double inner = 0.3;
    double half = 1.0;
    std::string file;
    friend bool operator==(const Target&, const Target&) = default;
  } target;

  struct Geometry {
    std::string field;  // required for the geometry kind
    std::optional<double> eps_min;  // 5h when unset
    std::optional<double> eps_max;  // max|u|/4 when unset
    std::size_t rows = 20;
    std::size_t coarea_samples = 64;
    bool diagnose = false;  // also run on the solve-aux minimizer
    friend bool operator==(const Geometry&, const Geometry&) = default;
  } geometry;

  struct Sweep {
    ScenarioKind base = ScenarioKind::solve_aux;
    std::string parameter;  // section.key of a numeric key
    std::vector<double> values;
    friend bool operator==(const Sweep&, const Sweep&) = default;
  } sweep;

  struct Certificate {
    double c = 1.0;
    double alpha = 0.0;
    double C = 1.0;
    SourceSpec a = SourceSpec::constant(0.0);
    SourceSpec b = SourceSpec::constant(0.0);
    SourceSpec offset = SourceSpec::constant(0.0);
    double gamma = 2.0;
    double sigma = 2.0;
    double q = 2.0;
    double K = 0.0;
    std::optional<double> sobolev_power;
    std::vector<std::string> claims;  // condition names
    std::optional<double> lambda1;    // skips the eigenvalue estimate when set
    std::size_t samples = 10000;
    double s_max = 100.0;
    double z_max = 100.0;
    friend bool operator==(const Certificate&, const Certificate&) = default;
  } certificate;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct ConfigError {
  std::size_t line = 0;  // 0 for errors without a source line
  std::string message;
};

class ConfigParseError : public std::runtime_error {
 public:
  explicit ConfigParseError(std::vector<ConfigError> errors);
  const std::vector<ConfigError>& errors() const { return errors_; }

 private:
  std::vector<ConfigError> errors_;
};

/// Strict INI-style text: `[section]` headers, `key = value` lines, `#`
/// comments. Values are numbers, booleans, bare words, double-quoted strings
/// or inline lists `[a, b]`. Relative file paths resolve against base_dir.
/// Throws ConfigParseError listing every error with its line.
ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

/// Sets `section.key` (or a top-level key) from its textual value, with the
/// same checks as parse_config.
void apply_override(ScenarioConfig& cfg, const std::string& path, const std::string& value,
                    const std::filesystem::path& base_dir = ".");

/// Canonical text; parse_config(print_config(c)) == c.
std::string print_config(const ScenarioConfig& cfg);

/// Shortest decimal text that parses back to v.
std::string short_real(double v);

/// Cross-key checks (exponent, grid shape, required keys per kind).
std::vector<ConfigError> validate_config(const ScenarioConfig& cfg);

GridSpec make_scenario_grid(const ScenarioConfig& cfg);
IntegrandSpec make_integrand(const ScenarioConfig& cfg, const GridSpec& g);
StateSolveOptions make_solve_options(const ScenarioConfig& cfg);
AuxParams make_aux_params(const ScenarioConfig& cfg);
DomainMask make_target(const ScenarioConfig& cfg, const GridSpec& g);
GrowthCertificate make_certificate(const ScenarioConfig& cfg, const GridSpec& g);

struct ManifestEntry {
  std::string path;  // relative to out_dir
  std::uintmax_t bytes = 0;
  std::string sha256;
};

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

struct RunReport {
  ScenarioConfig config;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  nlohmann::json results = nlohmann::json::object();
  std::vector<ManifestEntry> manifest;
  std::vector<std::string> errors;
  bool converged = true;

  bool ok() const { return converged && errors.empty(); }
  nlohmann::json to_json() const;
};

/// Runs the pipeline for cfg.kind, writing every artifact under cfg.out_dir
/// plus report.json. Exceptions are caught into `errors`; artifacts written
/// before the failure stay in the manifest.
RunReport run_scenario(const ScenarioConfig& cfg);

/// Worker count for sweeps: QS_THREADS when set and positive, else the
/// hardware concurrency.
std::size_t sweep_threads();

}  // namespace qs
