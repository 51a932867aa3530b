#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "qs/cli.hpp"

using namespace qs;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = "cli_test_out";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<ConfigError> errors_of(const std::string& text, const fs::path& base = ".") {
  try {
    parse_config(text, base);
  } catch (const ConfigParseError& e) {
    return e.errors();
  }
  return {};
}

bool has_error(const std::vector<ConfigError>& es, std::size_t line, const std::string& fragment) {
  for (const auto& e : es)
    if (e.line == line && e.message.find(fragment) != std::string::npos) return true;
  return false;
}

ScenarioConfig disc_config(ScenarioKind kind, std::size_t cells, const std::string& dir) {
  ScenarioConfig c;
  c.kind = kind;
  c.grid.origin = {-1.25, -1.25};
  c.grid.extent = {2.5, 2.5};
  c.grid.cells = cells;
  c.out_dir = (kRoot / dir).string();
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal eigen config") {
  const auto c = parse_config("kind = eigen\n[grid]\ncells = 64\n[integrand]\np = 2\n");
  CHECK(c.kind == ScenarioKind::eigen);
  CHECK(c.grid.cells == 64);
  CHECK(c.integrand.p == 2.0);
  CHECK(validate_config(c).empty());
}

TEST_CASE("config errors carry lines") {
  CHECK(has_error(errors_of("kind = eigen\n[integrand]\np = 0.5\n"), 3, "exponent must exceed 1"));
  const auto typo = errors_of("kind = solve-aux\n[integrand]\nlamda = 0.1\n");
  CHECK(has_error(typo, 3, "unknown key 'lamda'"));
  CHECK(has_error(typo, 3, "did you mean 'lam'"));
  CHECK(has_error(errors_of("[integrnd]\np = 2\n"), 1, "did you mean 'integrand'"));
  CHECK(has_error(errors_of("[grid]\ncells = many\n"), 2, ""));
  CHECK(has_error(errors_of("[grid]\ncells = 8\ncells = 16\n"), 3, "duplicate"));
  CHECK(has_error(errors_of("[integrand]\ng = \"file:does/not/exist.txt\"\n"), 2, "does/not/exist.txt"));
  CHECK(has_error(errors_of("[integrand]\nlam = -0.1\n"), 2, ""));
  CHECK(has_error(errors_of("[integrand]\ng = \"expr:sin(x\"\n"), 2, ""));
  // every error is reported, not just the first
  const auto many = errors_of("kind = eigen\n[integrand]\np = 0.5\nlamda = 1\n[grid]\ncells = x\n");
  CHECK(many.size() >= 3);
  CHECK_THROWS_AS(parse_config("kind = teleport\n"), ConfigParseError);
}

TEST_CASE("print and parse round-trip") {
  std::vector<ScenarioConfig> configs(4);
  configs[1].kind = ScenarioKind::sweep;
  configs[1].sweep.parameter = "integrand.lam";
  configs[1].sweep.values = {0.03, 0.0325, 0.1 + 0.2};
  configs[1].integrand.lam = SourceSpec::constant(0.03);
  configs[2].kind = ScenarioKind::check;
  configs[2].integrand.g = {SourceSpec::Kind::expression, 0.0, "1 + sin(3*x)*y"};
  configs[2].certificate.claims = {"strict_lower_growth", "state_lipschitz"};
  configs[2].certificate.lambda1 = 19.7;
  configs[2].certificate.sobolev_power = 3.5;
  configs[2].target.center = std::array<double, 2>{0.1, -0.2};
  configs[3] = disc_config(ScenarioKind::counterexample, 48, "round \"trip\"");
  configs[3].integrand.p = 2.5;
  configs[3].aux.sigmas = {0.3, 0.01};
  configs[3].aux.prune = false;
  configs[3].solver.method = "nlcg";
  configs[3].geometry.eps_min = 1e-3;
  configs[3].output = "out.txt";
  configs[3].seed = 123456789012345ULL;
  for (const auto& c : configs) {
    const auto text = print_config(c);
    CHECK(parse_config(text) == c);
    CHECK(print_config(parse_config(text)) == text);
  }
  CHECK(short_real(0.1) == "0.1");
  CHECK(short_real(0.03 + 0.0025 * 4) == "0.04");
  CHECK(short_real(1e-10) == "1e-10");
  for (const auto k : {ScenarioKind::eigen, ScenarioKind::solve_aux, ScenarioKind::sweep})
    CHECK(parse_kind(kind_name(k)) == k);
}

TEST_CASE("overrides") {
  ScenarioConfig c;
  apply_override(c, "integrand.lam", "0.02");
  CHECK(c.integrand.lam == SourceSpec::constant(0.02));
  apply_override(c, "grid.cells", "32");
  CHECK(c.grid.cells == 32);
  CHECK_THROWS_AS(apply_override(c, "integrand.lamda", "1"), ConfigParseError);
  CHECK_THROWS_AS(apply_override(c, "output", "../escape.txt"), ConfigParseError);
  CHECK_THROWS_AS(apply_override(c, "output", "/tmp/abs.txt"), ConfigParseError);
}

TEST_CASE("sources") {
  const auto g = make_grid_cells({0, 0}, {1, 1}, 8);
  const auto e = materialize({SourceSpec::Kind::expression, 0.0, "x + 2*y"}, g);
  CHECK(e[g.node(4, 2)] == doctest::Approx(0.5 + 0.5));
  CHECK(materialize(SourceSpec::constant(3.0), g)[0] == 3.0);
  fs::create_directories(kRoot);
  save_field((kRoot / "src.txt").string(), e);
  const auto c = parse_config("[integrand]\ng = \"file:src.txt\"\n", kRoot);
  CHECK(materialize(c.integrand.g, g).values == e.values);
  CHECK_THROWS(materialize(c.integrand.g, make_grid_cells({0, 0}, {1, 1}, 9)));
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("eigen scenario") {
  ScenarioConfig c;
  c.kind = ScenarioKind::eigen;
  c.grid.cells = 128;
  c.out_dir = (kRoot / "eigen").string();
  const auto r = run_scenario(c);
  CHECK(r.ok());
  CHECK(r.results["eigenvalue"].get<double>() == doctest::Approx(2 * M_PI * M_PI).epsilon(0.01));
  CHECK(fs::exists(fs::path(c.out_dir) / "report.json"));
  const auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "report.json"));
  CHECK(j.contains("config"));
  CHECK(j.contains("timings"));
  CHECK(j.contains("manifest"));
  CHECK(j["converged"] == true);
}

TEST_CASE("counterexample scenario") {
  const auto c = disc_config(ScenarioKind::counterexample, 64, "counterexample");
  const auto r = run_scenario(c);
  CHECK(r.ok());
  CHECK(r.results["success"] == true);
}

TEST_CASE("manifest hashes match the emitted files and stay under out_dir") {
  auto c = disc_config(ScenarioKind::solve_aux, 24, "manifest");
  c.grid.origin = {0, 0};
  c.grid.extent = {1, 1};
  c.integrand.lam = SourceSpec::constant(0.005);
  c.geometry.diagnose = true;
  fs::remove_all(c.out_dir);
  const auto r = run_scenario(c);
  REQUIRE(r.ok());
  std::set<std::string> listed{"report.json"};
  for (const auto& m : r.manifest) {
    const auto p = fs::path(c.out_dir) / m.path;
    CHECK(fs::path(m.path).is_relative());
    CHECK(m.path.find("..") == std::string::npos);
    CHECK(sha256_file(p) == m.sha256);
    CHECK(fs::file_size(p) == m.bytes);
    listed.insert(m.path);
  }
  std::set<std::string> present;
  for (const auto& e : fs::recursive_directory_iterator(c.out_dir))
    if (e.is_regular_file()) present.insert(fs::relative(e.path(), c.out_dir).generic_string());
  CHECK(present == listed);
}

TEST_CASE("same config gives identical manifest hashes") {
  auto a = disc_config(ScenarioKind::counterexample, 40, "repro_a");
  auto b = a;
  b.out_dir = (kRoot / "repro_b").string();
  const auto ra = run_scenario(a), rb = run_scenario(b);
  REQUIRE(ra.manifest.size() == rb.manifest.size());
  for (std::size_t i = 0; i < ra.manifest.size(); ++i) {
    CHECK(ra.manifest[i].path == rb.manifest[i].path);
    CHECK(ra.manifest[i].sha256 == rb.manifest[i].sha256);
  }
}

TEST_CASE("sweeps") {
  SUBCASE("grid refinement of disc torsion") {
    auto c = disc_config(ScenarioKind::sweep, 16, "sweep_h");
    c.sweep.base = ScenarioKind::torsion;
    c.sweep.parameter = "grid.cells";
    c.sweep.values = {32, 64, 128};
    const auto r = run_scenario(c);
    REQUIRE(r.ok());
    const auto& rows = r.results["rows"];
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < 3; ++i)
      CHECK(rows[i]["results"]["max_error"].get<double>() < rows[i - 1]["results"]["max_error"].get<double>());
  }
  SUBCASE("exponent sweep of the disc centre value") {
    auto c = disc_config(ScenarioKind::sweep, 80, "sweep_p");
    c.sweep.base = ScenarioKind::torsion;
    c.sweep.parameter = "integrand.p";
    c.sweep.values = {1.5, 2, 3};
    const auto r = run_scenario(c);
    REQUIRE(r.ok());
    const auto& rows = r.results["rows"];
    for (std::size_t i = 0; i < 3; ++i) {
      const double p = c.sweep.values[i];
      CHECK(rows[i]["results"]["w_center"].get<double>() == doctest::Approx(oracle::radial_torsion(p, 1, 0)).epsilon(0.05));
    }
  }
  SUBCASE("thread count does not change the output") {
    auto c = disc_config(ScenarioKind::sweep, 16, "sweep_t1");
    c.grid.origin = {0, 0};
    c.grid.extent = {1, 4};
    c.sweep.parameter = "integrand.lam";
    c.sweep.values = {0.02, 0.03, 0.06, 0.08};
    setenv("QS_THREADS", "1", 1);
    CHECK(sweep_threads() == 1);
    const auto one = run_scenario(c);
    setenv("QS_THREADS", "4", 1);
    CHECK(sweep_threads() == 4);
    c.out_dir = (kRoot / "sweep_t4").string();
    const auto four = run_scenario(c);
    unsetenv("QS_THREADS");
    CHECK(sweep_threads() >= 1);
    REQUIRE(one.manifest.size() == four.manifest.size());
    for (std::size_t i = 0; i < one.manifest.size(); ++i) {
      CHECK(one.manifest[i].path == four.manifest[i].path);
      CHECK(one.manifest[i].sha256 == four.manifest[i].sha256);
    }
    CHECK(slurp(kRoot / "sweep_t1" / "sweep.csv") == slurp(kRoot / "sweep_t4" / "sweep.csv"));
    const auto& rows = one.results["rows"];
    CHECK(rows[0]["results"]["support_measure"].get<double>() > 3.5);
    CHECK(rows[3]["results"]["support_measure"].get<double>() == 0.0);
  }
}

TEST_CASE("failed rows are recorded and the sweep continues") {
  auto c = disc_config(ScenarioKind::sweep, 16, "sweep_fail");
  c.sweep.base = ScenarioKind::torsion;
  c.sweep.parameter = "integrand.p";
  c.sweep.values = {2, 0.5, 3};
  const auto r = run_scenario(c);
  CHECK_FALSE(r.ok());
  CHECK_FALSE(r.errors.empty());
  const auto& rows = r.results["rows"];
  REQUIRE(rows.size() == 3);
  CHECK(rows[0]["status"] == "ok");
  CHECK(rows[1]["status"] != "ok");
  CHECK(rows[2]["status"] == "ok");
}

TEST_CASE("geometry scenario") {
  auto c = disc_config(ScenarioKind::torsion, 64, "geo_src");
  const auto t = run_scenario(c);
  REQUIRE(t.ok());
  ScenarioConfig g;
  g.kind = ScenarioKind::geometry;
  g.geometry.field = (fs::path(c.out_dir) / "field.txt").string();
  g.geometry.eps_min = 0.01;
  g.geometry.eps_max = 0.05;
  g.geometry.rows = 5;
  g.out_dir = (kRoot / "geo").string();
  g.output = "report.csv";
  const auto r = run_scenario(g);
  CHECK(r.ok());
  CHECK(r.results["geometry"]["c_fit"].get<double>() > 0);
  CHECK(r.results["geometry"]["rows"].size() == 5);
  CHECK(fs::exists(kRoot / "geo" / "report.csv"));
}

TEST_CASE("check scenario") {
  ScenarioConfig c;
  c.kind = ScenarioKind::check;
  c.grid.cells = 16;
  c.out_dir = (kRoot / "check").string();
  c.integrand.g = SourceSpec::constant(0.1);
  c.integrand.lam = SourceSpec::constant(0.1);
  c.certificate.c = 0.05;
  c.certificate.alpha = 10;
  c.certificate.K = 0.1;
  c.certificate.a = SourceSpec::constant(1);
  c.certificate.b = SourceSpec::constant(1);
  c.certificate.offset = SourceSpec::constant(1);
  c.certificate.claims = {"strict_lower_growth", "state_lipschitz", "two_sided_growth"};
  const auto r = run_scenario(c);
  CHECK(r.ok());
  CHECK(r.results["existence"] == true);
  CHECK(r.results["openness"] == true);
  CHECK(r.results["finite_perimeter"] == true);
  c.integrand.lam = SourceSpec::constant(0.0);
  CHECK(run_scenario(c).results["finite_perimeter"] == false);
}

TEST_CASE("non-convergence and errors are reported") {
  ScenarioConfig c;
  c.kind = ScenarioKind::eigen;
  c.grid.cells = 32;
  c.eigen.max_iter = 1;
  c.out_dir = (kRoot / "noconv").string();
  const auto r = run_scenario(c);
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.ok());
  auto bad = disc_config(ScenarioKind::counterexample, 32, "bad_mask");
  save_mask((kRoot / "grid40.txt").string(), DomainMask(make_grid_cells({0, 0}, {1, 1}, 40), true));
  bad.target.shape = "file";
  bad.target.file = (kRoot / "grid40.txt").string();
  const auto e = run_scenario(bad);
  CHECK_FALSE(e.errors.empty());
  CHECK(fs::exists(fs::path(bad.out_dir) / "report.json"));
}

TEST_CASE("command line exit status") {
  const auto dir = (kRoot / "exe").string();
  CHECK(run_cli("eigen --grid 16 --out-dir " + dir) == 0);
  CHECK(run_cli("eigen --grid 16 --set eigen.max_iter=1 --out-dir " + dir) == 1);
  CHECK(run_cli("eigen --grid 16 --set integrand.lamda=1 --out-dir " + dir) == 2);
  std::ofstream(kRoot / "bad.ini") << "kind = eigen\n[integrand]\np = 0.5\n";
  CHECK(run_cli("eigen --config " + (kRoot / "bad.ini").string() + " --out-dir " + dir) == 2);
  CHECK(run_cli("torsion --grid 24 --mask disc --out w.txt --out-dir " + dir) == 0);
  CHECK(fs::exists(fs::path(dir) / "w.txt"));
  CHECK(run_cli("torsion --grid 24 --out ../w.txt --out-dir " + dir) == 2);
  CHECK_FALSE(fs::exists(kRoot / "w.txt"));
}
