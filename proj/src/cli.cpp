#include "qs/cli.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "qs/geometry.hpp"

namespace qs {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read '" + path.string() + "'");
  const std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return sha256_hex(data);
}

json RunReport::to_json() const {
  json j;
  j["kind"] = kind_name(config.kind);
  j["config"] = print_config(config);
  j["timings"] = json::array();
  for (const auto& [stage, s] : timings) j["timings"].push_back({{"stage", stage}, {"seconds", s}});
  j["results"] = results;
  j["manifest"] = json::array();
  for (const auto& m : manifest) j["manifest"].push_back({{"path", m.path}, {"bytes", m.bytes}, {"sha256", m.sha256}});
  j["errors"] = errors;
  j["converged"] = converged;
  j["ok"] = ok();
  return j;
}

std::size_t sweep_threads() {
  if (const char* v = std::getenv("QS_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Clock = std::chrono::steady_clock;

class Run {
 public:
  explicit Run(RunReport& r) : r_(r), dir_(r.config.out_dir) { fs::create_directories(dir_); }

  void emit(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    os << content;
    os.close();
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    r_.manifest.push_back({name, content.size(), sha256_hex(content)});
  }

  template <class Fn>
  auto timed(const std::string& stage, Fn&& fn) {
    const auto t0 = Clock::now();
    struct Guard {
      RunReport& r;
      std::string stage;
      Clock::time_point t0;
      ~Guard() { r.timings.emplace_back(stage, std::chrono::duration<double>(Clock::now() - t0).count()); }
    } guard{r_, stage, t0};
    return fn();
  }

  std::string name(const std::string& fallback) const {
    return r_.config.output.empty() ? fallback : r_.config.output;
  }

  RunReport& report() { return r_; }
  const ScenarioConfig& cfg() const { return r_.config; }

 private:
  RunReport& r_;
  fs::path dir_;
};

template <class W>
std::string dump(W&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

json solve_json(const SolveReport& s) {
  return {{"energy", s.energy},
          {"iterations", s.iterations},
          {"final_gradient_norm", s.final_gradient_norm},
          {"converged", s.converged},
          {"regularization_delta", s.regularization_delta}};
}

json stats_json(const AuxStats& s) {
  json stages = json::array();
  for (std::size_t i = 0; i < s.stage_iterations.size(); ++i)
    stages.push_back({{"iterations", s.stage_iterations[i]}, {"converged", s.stage_converged[i] != 0}});
  return {{"stages", stages},
          {"energy_after_extraction", s.energy_after_extraction},
          {"rounds", s.rounds},
          {"grown", s.grown},
          {"shrunk", s.shrunk},
          {"flips", s.grown + s.shrunk},
          {"trials", s.trials},
          {"pruned_components", s.pruned_components},
          {"cycled", s.cycled}};
}

Point target_center(const ScenarioConfig& cfg, const GridSpec& g) {
  if (cfg.target.center) return {(*cfg.target.center)[0], (*cfg.target.center)[1]};
  return {g.origin().x + 0.5 * g.width(), g.origin().y + 0.5 * g.height()};
}

void run_eigen(Run& run) {
  const auto& cfg = run.cfg();
  const auto g = make_scenario_grid(cfg);
  auto& res = run.report().results;
  EigenResult e;
  bool converged = true;
  run.timed("eigen", [&] {
    try {
      e = eigen_estimate(g, cfg.integrand.p, cfg.eigen.tol, cfg.eigen.max_iter);
    } catch (const EigenNonConvergence& ex) {
      converged = false;
      e.value = ex.quotient;
      res["message"] = ex.what();
    }
  });
  res["eigenvalue"] = e.value;
  res["iterations"] = e.iterations;
  res["converged"] = converged;
  run.report().converged = converged;
  if (!e.trace.empty()) {
    run.emit("trace.csv", dump([&](std::ostream& os) {
               os << "iteration,quotient\n";
               for (std::size_t i = 0; i < e.trace.size(); ++i) os << i << ',' << format_real(e.trace[i]) << '\n';
             }));
  }
  if (!e.eigenfunction.values.empty())
    run.emit(run.name("eigenfunction.txt"), dump([&](std::ostream& os) { write_field(os, e.eigenfunction); }));
}

void run_torsion(Run& run) {
  const auto& cfg = run.cfg();
  const auto g = make_scenario_grid(cfg);
  const auto mask = make_target(cfg, g);
  const double p = cfg.integrand.p;
  auto [w, rep] = run.timed("torsion", [&] { return torsion(mask, p, make_solve_options(cfg)); });
  auto& res = run.report().results;
  res["solve"] = solve_json(rep);
  res["energy"] = rep.energy;
  res["iterations"] = rep.iterations;
  res["max_abs"] = w.max_abs();
  const Point c = target_center(cfg, g);
  res["w_center"] = w.interpolate(c);
  if (cfg.target.shape == "disc") {
    // w(r) = ((p-1)/p) d^{-1/(p-1)} (R^{p'} - r^{p'}) with d = 2
    const double pc = p / (p - 1.0);
    const double k = (p - 1.0) / p * std::pow(2.0, -1.0 / (p - 1.0));
    const double R = std::pow(cfg.target.radius, pc);
    double err = 0.0;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      const auto x = g.node_point(n);
      const double r = std::hypot(x.x - c.x, x.y - c.y);
      err = std::max(err, std::abs(w[n] - k * std::max(0.0, R - std::pow(r, pc))));
    }
    res["radial_w0"] = k * R;
    res["max_error"] = err;
  }
  run.report().converged = rep.converged;
  run.emit(run.name("field.txt"), dump([&](std::ostream& os) { write_field(os, w); }));
  run.emit("mask.txt", dump([&](std::ostream& os) { write_mask(os, mask); }));
}

std::vector<double> eps_levels(const ScenarioConfig& cfg, const ScalarField& u) {
  const double lo = cfg.geometry.eps_min.value_or(5.0 * u.grid.h());
  const double hi = cfg.geometry.eps_max.value_or(0.25 * u.max_abs());
  if (!(lo > 0.0 && hi >= lo)) return {};
  return log_spaced(lo, hi, cfg.geometry.rows);
}

json geometry_json(const GeometryReport& r, const ScalarField& u, std::size_t coarea_samples) {
  json rows = json::array();
  bool coarea_ok = true;
  for (const auto& row : r.rows) {
    const double co = coarea_profile(u, row.eps, coarea_samples);
    coarea_ok = coarea_ok && co <= r.c_fit * row.eps;
    rows.push_back({{"eps", row.eps},
                    {"band_measure", row.band_measure},
                    {"band_p_dirichlet", row.band_p_dirichlet},
                    {"perimeter", row.perimeter},
                    {"ratio", row.ratio},
                    {"coarea", co}});
  }
  return {{"c_fit", r.c_fit},
          {"delta", r.delta},
          {"delta_perimeter", r.delta_perimeter},
          {"sup_delta_perimeter", r.sup_delta_perimeter},
          {"sign_change_triangles", r.sign_change_triangles},
          {"coarea_below_fit", coarea_ok},
          {"rows", rows}};
}

void run_geometry_on(Run& run, const ScalarField& u, const std::string& csv_name) {
  const auto& cfg = run.cfg();
  const auto levels = eps_levels(cfg, u);
  auto& res = run.report().results;
  if (levels.empty()) {
    res["geometry"] = {{"note", "empty level range"}};
    return;
  }
  const auto r = run.timed("geometry", [&] { return finite_perimeter_diagnostic(u, levels, cfg.integrand.p); });
  res["geometry"] = geometry_json(r, u, cfg.geometry.coarea_samples);
  run.emit(csv_name, dump([&](std::ostream& os) { write_geometry_csv(os, r); }));
}

void run_solve_aux(Run& run) {
  const auto& cfg = run.cfg();
  const auto g = make_scenario_grid(cfg);
  const auto f = make_integrand(cfg, g);
  const auto s = run.timed("solve_auxiliary", [&] { return solve_auxiliary(f, g, make_aux_params(cfg)); });
  auto& res = run.report().results;
  res["energy"] = s.report.energy;
  res["solve"] = solve_json(s.report);
  res["stats"] = stats_json(s.stats);
  res["support_measure"] = measure(s.support);
  res["max_abs"] = s.u.max_abs();
  res["grown"] = s.stats.grown;
  res["shrunk"] = s.stats.shrunk;
  run.report().converged = s.report.converged;
  run.emit(run.name("field.txt"), dump([&](std::ostream& os) { write_field(os, s.u); }));
  run.emit("mask.txt", dump([&](std::ostream& os) { write_mask(os, s.support); }));
  run.emit("energy_trace.csv", dump([&](std::ostream& os) {
             os << "step,energy\n";
             for (std::size_t i = 0; i < s.stats.energy_trace.size(); ++i)
               os << i << ',' << format_real(s.stats.energy_trace[i]) << '\n';
           }));
  if (cfg.geometry.diagnose) run_geometry_on(run, s.u, "geometry.csv");
}

void run_counterexample(Run& run) {
  const auto& cfg = run.cfg();
  const auto g = make_scenario_grid(cfg);
  const auto target = make_target(cfg, g);
  const auto r = run.timed("verify_recovery", [&] { return verify_recovery(target, cfg.integrand.p, make_aux_params(cfg)); });
  auto& res = run.report().results;
  res["symmetric_difference"] = r.symmetric_difference;
  res["allowance"] = r.allowance;
  res["energy_target"] = r.energy_target;
  res["energy_recovered"] = r.energy_recovered;
  res["source_l1"] = r.source_l1;
  res["success"] = r.success;
  res["converged"] = r.converged;
  res["stats"] = stats_json(r.stats);
  run.report().converged = r.converged;
  run.emit(run.name("recovery.csv"), dump([&](std::ostream& os) {
             os << "shape,p,cells,symmetric_difference,allowance,energy_target,energy_recovered,source_l1,converged,"
                   "success\n";
             os << cfg.target.shape << ',' << format_real(cfg.integrand.p) << ',' << cfg.grid.cells << ','
                << format_real(r.symmetric_difference) << ',' << format_real(r.allowance) << ','
                << format_real(r.energy_target) << ',' << format_real(r.energy_recovered) << ','
                << format_real(r.source_l1) << ',' << r.converged << ',' << r.success << '\n';
           }));
  run.emit("target_mask.txt", dump([&](std::ostream& os) { write_mask(os, r.target); }));
  run.emit("recovered_mask.txt", dump([&](std::ostream& os) { write_mask(os, r.recovered); }));
  run.emit("source.txt", dump([&](std::ostream& os) { write_field(os, r.source); }));
  run.emit("field.txt", dump([&](std::ostream& os) { write_field(os, r.solution); }));
}

void run_geometry(Run& run) {
  const auto u = load_field(run.cfg().geometry.field);
  run.report().results["max_abs"] = u.max_abs();
  run_geometry_on(run, u, run.name("report.csv"));
}

void run_check(Run& run) {
  const auto& cfg = run.cfg();
  const auto g = make_scenario_grid(cfg);
  const auto f = make_integrand(cfg, g);
  const auto cert = make_certificate(cfg, g);
  auto& res = run.report().results;
  double lambda1 = 0.0;
  if (cfg.certificate.lambda1) {
    lambda1 = *cfg.certificate.lambda1;
  } else {
    run.timed("eigen", [&] {
      try {
        lambda1 = eigen_estimate(g, cfg.integrand.p, cfg.eigen.tol, cfg.eigen.max_iter).value;
      } catch (const EigenNonConvergence& ex) {
        lambda1 = ex.quotient;
        run.report().converged = false;
      }
    });
  }
  SamplingBox box{cfg.certificate.s_max, cfg.certificate.z_max, cfg.certificate.samples};
  const auto t = run.timed("applicable_theorems", [&] { return applicable_theorems(*f, cert, lambda1, g, cfg.seed, box); });
  res["lambda1"] = lambda1;
  res["existence"] = t.existence;
  res["openness"] = t.openness;
  res["finite_perimeter"] = t.finite_perimeter;
  res["reasons"] = t.reasons;
  run.emit(run.name("applicability.txt"), dump([&](std::ostream& os) {
             os << "lambda1 = " << format_real(lambda1) << '\n';
             os << "existence = " << (t.existence ? "true" : "false") << '\n';
             os << "openness = " << (t.openness ? "true" : "false") << '\n';
             os << "finite_perimeter = " << (t.finite_perimeter ? "true" : "false") << '\n';
             for (const auto& why : t.reasons) os << "- " << why << '\n';
           }));
}

std::vector<std::string> sweep_columns(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::eigen: return {"eigenvalue", "iterations"};
    case ScenarioKind::torsion: return {"energy", "w_center", "radial_w0", "max_error", "iterations"};
    case ScenarioKind::solve_aux: return {"energy", "support_measure", "max_abs", "grown", "shrunk"};
    case ScenarioKind::counterexample: return {"symmetric_difference", "allowance", "source_l1", "success"};
    default: return {};
  }
}

std::string cell(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number()) return format_real(v.get<double>());
  return {};
}

void run_sweep(Run& run) {
  const auto& cfg = run.cfg();
  const auto& values = cfg.sweep.values;
  std::vector<RunReport> rows(values.size());
  std::vector<std::string> row_dirs(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < values.size();) {
      ScenarioConfig c = cfg;
      c.kind = cfg.sweep.base;
      char dir[32];
      std::snprintf(dir, sizeof dir, "row_%03zu", i);
      row_dirs[i] = dir;
      c.out_dir = (fs::path(cfg.out_dir) / dir).string();
      try {
        apply_override(c, cfg.sweep.parameter, short_real(values[i]));
        const auto errs = validate_config(c);
        if (!errs.empty()) throw ConfigParseError(errs);
        rows[i] = run_scenario(c);
      } catch (const std::exception& e) {
        rows[i].config = c;
        rows[i].errors.push_back(e.what());
      }
    }
  };
  run.timed("sweep", [&] {
    const auto n = std::min(sweep_threads(), std::max<std::size_t>(values.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  });

  auto& rep = run.report();
  const auto cols = sweep_columns(cfg.sweep.base);
  json jrows = json::array();
  std::ostringstream csv;
  csv << "index," << cfg.sweep.parameter << ",status,converged";
  for (const auto& c : cols) csv << ',' << c;
  csv << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& r = rows[i];
    const bool failed = !r.errors.empty();
    csv << i << ',' << short_real(values[i]) << ',' << (failed ? "failed" : "ok") << ',' << (r.converged ? 1 : 0);
    for (const auto& c : cols) csv << ',' << (failed || !r.results.contains(c) ? "" : cell(r.results[c]));
    csv << '\n';
    for (const auto& m : r.manifest) rep.manifest.push_back({row_dirs[i] + "/" + m.path, m.bytes, m.sha256});
    jrows.push_back({{"value", values[i]}, {"status", failed ? "failed" : "ok"}, {"results", r.results}, {"errors", r.errors}, {"converged", r.converged}});
    rep.converged = rep.converged && r.converged && !failed;
    if (failed) rep.errors.push_back("row " + std::to_string(i) + ": " + r.errors.front());
  }
  rep.results["rows"] = jrows;
  run.emit(run.name("sweep.csv"), csv.str());
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& cfg) {
  RunReport report;
  report.config = cfg;
  try {
    Run run(report);
    switch (cfg.kind) {
      case ScenarioKind::eigen: run_eigen(run); break;
      case ScenarioKind::torsion: run_torsion(run); break;
      case ScenarioKind::solve_aux: run_solve_aux(run); break;
      case ScenarioKind::counterexample: run_counterexample(run); break;
      case ScenarioKind::geometry: run_geometry(run); break;
      case ScenarioKind::sweep: run_sweep(run); break;
      case ScenarioKind::check: run_check(run); break;
    }
  } catch (const std::exception& e) {
    report.errors.push_back(e.what());
  }
  try {
    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "report.json");
    os << report.to_json().dump(2) << '\n';
  } catch (const std::exception& e) {
    report.errors.push_back(std::string("report.json: ") + e.what());
  }
  return report;
}

}  // namespace qs
