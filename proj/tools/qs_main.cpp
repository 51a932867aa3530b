// Command-line front end: one subcommand per scenario kind.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qs/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Scenario config file")->check(CLI::ExistingFile);
  app->add_option("--out-dir", c.out_dir, "Directory receiving every output");
  app->add_option("--set", c.sets, "Override a key, e.g. --set integrand.lam=0.02");
  app->add_option("--seed", c.seed, "Seed for sampling and random masks");
}

/// Flag values become key overrides so they get the config checks.
using Overrides = std::vector<std::pair<std::string, std::string>>;

qs::ScenarioConfig build(qs::ScenarioKind kind, const Common& c, const Overrides& defaults,
                         const Overrides& flags) {
  qs::ScenarioConfig cfg;
  if (!c.config.empty()) {
    std::ifstream is(c.config);
    std::stringstream ss;
    ss << is.rdbuf();
    cfg = qs::parse_config(ss.str(), fs::path(c.config).parent_path());
  } else {
    for (const auto& [k, v] : defaults) qs::apply_override(cfg, k, v);
  }
  cfg.kind = kind;
  for (const auto& [k, v] : flags) qs::apply_override(cfg, k, v);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw qs::ConfigParseError({{0, "--set expects KEY=VALUE, got '" + s + "'"}});
    qs::apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  if (c.seed) cfg.seed = *c.seed;
  const auto errors = qs::validate_config(cfg);
  if (!errors.empty()) throw qs::ConfigParseError(errors);
  return cfg;
}

void print_summary(const qs::RunReport& r) {
  const auto& res = r.results;
  switch (r.config.kind) {
    case qs::ScenarioKind::eigen:
      if (res.contains("eigenvalue")) std::cout << "eigenvalue," << qs::format_real(res["eigenvalue"]) << '\n';
      if (std::ifstream trace(fs::path(r.config.out_dir) / "trace.csv"); trace) std::cout << trace.rdbuf();
      break;
    case qs::ScenarioKind::sweep:
      if (std::ifstream csv(fs::path(r.config.out_dir) / (r.config.output.empty() ? "sweep.csv" : r.config.output)); csv)
        std::cout << csv.rdbuf();
      break;
    case qs::ScenarioKind::check:
      for (const char* k : {"lambda1", "existence", "openness", "finite_perimeter"})
        if (res.contains(k)) std::cout << k << " = " << res[k].dump() << '\n';
      if (res.contains("reasons"))
        for (const auto& why : res["reasons"]) std::cout << "- " << why.get<std::string>() << '\n';
      break;
    default: {
      auto brief = res;
      brief.erase("rows");
      if (brief.contains("geometry")) brief["geometry"].erase("rows");
      std::cout << brief.dump(2) << '\n';
    }
  }
  for (const auto& e : r.errors) std::cerr << "error: " << e << '\n';
  if (!r.converged) std::cerr << "warning: a solve did not converge\n";
  std::cerr << "report: " << (fs::path(r.config.out_dir) / "report.json").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape optimization by indicator-penalized minimization"};
  app.require_subcommand(1);

  Common common;
  std::size_t grid = 0;
  double p = 0.0;
  std::string mask, shape, out, field, parameter;
  double eps_min = 0.0, eps_max = 0.0;
  std::size_t rows = 0;
  std::vector<double> values;

  auto* eigen = app.add_subcommand("eigen", "First Dirichlet eigenvalue estimate of the p-Laplacian");
  auto* tors = app.add_subcommand("torsion", "Torsion function of a mask");
  auto* aux = app.add_subcommand("solve-aux", "Minimize the auxiliary functional and extract the support");
  auto* cex = app.add_subcommand("counterexample", "Build the torsion-based source and verify recovery");
  auto* geo = app.add_subcommand("geometry", "Level-band and perimeter diagnostics of a field dump");
  auto* sweep = app.add_subcommand("sweep", "Run a scenario over values of one numeric key");
  auto* check = app.add_subcommand("check", "Classify which theorems the declared certificate supports");
  for (auto* s : {eigen, tors, aux, cex, geo, sweep, check}) add_common(s, common);
  for (auto* s : {eigen, tors, cex}) {
    s->add_option("--grid", grid, "Cells per side");
    s->add_option("--p", p, "Exponent");
  }
  tors->add_option("--mask", mask, "Mask dump or shape (disc, annulus, slit, square, full)");
  tors->add_option("--out", out, "Field dump name inside the output directory");
  cex->add_option("--shape", shape, "disc, annulus, slit or file");
  cex->add_option("--mask", mask, "Mask dump when --shape file");
  geo->add_option("--field", field, "Field dump")->check(CLI::ExistingFile);
  geo->add_option("--eps-min", eps_min, "Smallest level");
  geo->add_option("--eps-max", eps_max, "Largest level");
  geo->add_option("--rows", rows, "Number of log-spaced levels");
  geo->add_option("--out", out, "CSV name inside the output directory");
  sweep->add_option("--parameter", parameter, "Key to sweep, e.g. integrand.lam");
  sweep->add_option("--values", values, "Values of the swept key")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  // shapes are centred in the box (-1.25, 1.25)^2 unless a config says otherwise
  const Overrides shape_box{{"grid.origin", "[-1.25, -1.25]"}, {"grid.extent", "[2.5, 2.5]"}, {"grid.cells", "128"}};
  const Overrides unit_box{{"grid.cells", "128"}};
  Overrides flags;
  auto flag = [&](bool set, const std::string& key, const std::string& value) {
    if (set) flags.emplace_back(key, value);
  };
  auto quoted = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') q += '\\';
      q += c;
    }
    return q + '"';
  };

  try {
    qs::ScenarioConfig cfg;
    auto* sub = app.get_subcommands().front();
    flag(grid > 0, "grid.cells", std::to_string(grid));
    flag(p != 0.0, "integrand.p", qs::short_real(p));
    if (sub == eigen) {
      cfg = build(qs::ScenarioKind::eigen, common, unit_box, flags);
    } else if (sub == tors) {
      if (!mask.empty()) {
        if (fs::is_regular_file(mask)) {
          flag(true, "target.shape", "file");
          flag(true, "target.file", quoted(mask));
        } else {
          flag(true, "target.shape", mask);
        }
      }
      flag(!out.empty(), "output", quoted(out));
      cfg = build(qs::ScenarioKind::torsion, common, shape_box, flags);
    } else if (sub == aux) {
      cfg = build(qs::ScenarioKind::solve_aux, common, unit_box, flags);
    } else if (sub == cex) {
      flag(!shape.empty(), "target.shape", shape);
      flag(!mask.empty(), "target.file", quoted(mask));
      cfg = build(qs::ScenarioKind::counterexample, common, shape_box, flags);
    } else if (sub == geo) {
      flag(!field.empty(), "geometry.field", quoted(field));
      flag(eps_min > 0.0, "geometry.eps_min", qs::short_real(eps_min));
      flag(eps_max > 0.0, "geometry.eps_max", qs::short_real(eps_max));
      flag(rows > 0, "geometry.rows", std::to_string(rows));
      flag(!out.empty(), "output", quoted(out));
      cfg = build(qs::ScenarioKind::geometry, common, {}, flags);
    } else if (sub == sweep) {
      flag(!parameter.empty(), "sweep.parameter", parameter);
      if (!values.empty()) {
        std::string list = "[";
        for (std::size_t i = 0; i < values.size(); ++i) list += (i ? ", " : "") + qs::short_real(values[i]);
        flag(true, "sweep.values", list + "]");
      }
      cfg = build(qs::ScenarioKind::sweep, common, unit_box, flags);
    } else {
      cfg = build(qs::ScenarioKind::check, common, unit_box, flags);
    }
    const auto report = qs::run_scenario(cfg);
    print_summary(report);
    return report.ok() ? 0 : 1;
  } catch (const qs::ConfigParseError& e) {
    for (const auto& err : e.errors()) {
      std::cerr << "config error";
      if (err.line) std::cerr << " (line " << err.line << ")";
      std::cerr << ": " << err.message << '\n';
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
