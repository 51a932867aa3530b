#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "qs/cli.hpp"
#include "qs/expression.hpp"
#include "qs/shapes.hpp"

namespace qs {

namespace fs = std::filesystem;

std::string kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::eigen: return "eigen";
    case ScenarioKind::torsion: return "torsion";
    case ScenarioKind::solve_aux: return "solve-aux";
    case ScenarioKind::counterexample: return "counterexample";
    case ScenarioKind::geometry: return "geometry";
    case ScenarioKind::sweep: return "sweep";
    case ScenarioKind::check: return "check";
  }
  return "unknown";
}

std::optional<ScenarioKind> parse_kind(const std::string& name) {
  for (auto k : {ScenarioKind::eigen, ScenarioKind::torsion, ScenarioKind::solve_aux, ScenarioKind::counterexample,
                 ScenarioKind::geometry, ScenarioKind::sweep, ScenarioKind::check})
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

std::string short_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string join_errors(const std::vector<ConfigError>& errors) {
  std::ostringstream os;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i) os << '\n';
    if (errors[i].line) os << "line " << errors[i].line << ": ";
    os << errors[i].message;
  }
  return os.str();
}

}  // namespace

ConfigParseError::ConfigParseError(std::vector<ConfigError> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

ScalarField materialize(const SourceSpec& s, const GridSpec& g) {
  switch (s.kind) {
    case SourceSpec::Kind::constant: return constant_field(g, s.value);
    case SourceSpec::Kind::expression: return sample_expression(g, Expression::parse(s.text));
    case SourceSpec::Kind::file: {
      auto f = load_field(s.text);
      if (!(f.grid == g)) throw ConfigurationError("field '" + s.text + "' is on a different grid");
      f.boundary_zero = false;
      return f;
    }
  }
  return {};
}

namespace {

/// Right-hand side of `key = value`.
struct RawValue {
  bool is_list = false;
  std::vector<std::string> items;  // one item for scalars
  std::vector<bool> quoted;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Splits an item list, honouring double quotes. Returns an error message
/// on malformed input.
std::optional<std::string> tokenize(const std::string& text, RawValue& out) {
  std::string body = trim(text);
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') return "unterminated list";
    out.is_list = true;
    body = trim(body.substr(1, body.size() - 2));
    if (body.empty()) return std::nullopt;
  }
  std::size_t i = 0;
  while (true) {
    while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
    std::string item;
    bool q = false;
    if (i < body.size() && body[i] == '"') {
      q = true;
      ++i;
      bool closed = false;
      while (i < body.size()) {
        const char c = body[i++];
        if (c == '\\' && i < body.size()) {
          item += body[i++];
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          item += c;
        }
      }
      if (!closed) return "unterminated string";
      while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
    } else {
      const auto end = out.is_list ? body.find(',', i) : std::string::npos;
      item = trim(body.substr(i, end == std::string::npos ? std::string::npos : end - i));
      i = end == std::string::npos ? body.size() : end;
      if (item.empty()) return "empty value";
    }
    out.items.push_back(item);
    out.quoted.push_back(q);
    if (i >= body.size()) break;
    if (!out.is_list) return "unexpected text after value";
    if (body[i] != ',') return "expected ',' in list";
    ++i;
  }
  return std::nullopt;
}

std::optional<double> to_real(const std::string& s) {
  double v = 0.0;
  const auto* b = s.data();
  const auto* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) return std::nullopt;
  return v;
}

std::optional<std::size_t> to_count(const std::string& s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string list_text(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + short_real(v[i]);
  return out + "]";
}

using Setter = std::function<std::optional<std::string>(ScenarioConfig&, const RawValue&, const fs::path&)>;
using Printer = std::function<std::optional<std::string>(const ScenarioConfig&)>;

struct KeySpec {
  std::string section;  // empty for top-level keys
  std::string key;
  bool numeric;  // eligible as a sweep parameter
  Setter set;
  Printer print;
};

std::optional<std::string> scalar(const RawValue& v, std::string& out) {
  if (v.is_list || v.items.size() != 1) return "expected a single value";
  out = v.items[0];
  return std::nullopt;
}

Setter real_setter(std::function<double&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    const auto x = v.quoted[0] ? std::nullopt : to_real(s);
    if (!x) return "expected a real number, got '" + s + "'";
    ref(c) = *x;
    return std::nullopt;
  };
}

Setter optional_real_setter(std::function<std::optional<double>&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    const auto x = v.quoted[0] ? std::nullopt : to_real(s);
    if (!x) return "expected a real number, got '" + s + "'";
    ref(c) = *x;
    return std::nullopt;
  };
}

Setter count_setter(std::function<std::size_t&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    auto n = v.quoted[0] ? std::nullopt : to_count(s);
    // sweeps format integers through format_real
    if (!n) {
      const auto x = v.quoted[0] ? std::nullopt : to_real(s);
      if (x && *x >= 0.0 && *x == std::floor(*x) && *x < 1e15) n = static_cast<std::size_t>(*x);
    }
    if (!n) return "expected a nonnegative integer, got '" + s + "'";
    ref(c) = *n;
    return std::nullopt;
  };
}

Setter bool_setter(std::function<bool&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    if (s == "true") ref(c) = true;
    else if (s == "false") ref(c) = false;
    else return "expected true or false, got '" + s + "'";
    return std::nullopt;
  };
}

Setter word_setter(std::function<std::string&(ScenarioConfig&)> ref, std::vector<std::string> allowed) {
  return [ref, allowed](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      return "expected one of " + list + ", got '" + s + "'";
    }
    ref(c) = s;
    return std::nullopt;
  };
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty() || base == ".") return path.lexically_normal();
  return (base / path).lexically_normal();
}

Setter path_setter(std::function<std::string&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path& base) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    const auto path = resolve(base, s);
    if (!fs::is_regular_file(path)) return "missing file '" + path.string() + "'";
    ref(c) = path.string();
    return std::nullopt;
  };
}

Setter list_setter(std::function<std::vector<double>&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    if (!v.is_list) return "expected a list [a, b, ...]";
    std::vector<double> out;
    for (std::size_t i = 0; i < v.items.size(); ++i) {
      const auto x = v.quoted[i] ? std::nullopt : to_real(v.items[i]);
      if (!x) return "expected a real number in list, got '" + v.items[i] + "'";
      out.push_back(*x);
    }
    ref(c) = out;
    return std::nullopt;
  };
}

Setter pair_setter(std::function<void(ScenarioConfig&, std::array<double, 2>)> assign) {
  return [assign](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    if (!v.is_list || v.items.size() != 2) return "expected a pair [a, b]";
    std::array<double, 2> out{};
    for (std::size_t i = 0; i < 2; ++i) {
      const auto x = v.quoted[i] ? std::nullopt : to_real(v.items[i]);
      if (!x) return "expected a real number in pair, got '" + v.items[i] + "'";
      out[i] = *x;
    }
    assign(c, out);
    return std::nullopt;
  };
}

Setter source_setter(std::function<SourceSpec&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path& base) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    if (!v.quoted[0]) {
      if (const auto x = to_real(s)) {
        ref(c) = SourceSpec::constant(*x);
        return std::nullopt;
      }
    }
    if (s.rfind("file:", 0) == 0) {
      const auto path = resolve(base, s.substr(5));
      if (!fs::is_regular_file(path)) return "missing file '" + path.string() + "'";
      ref(c) = {SourceSpec::Kind::file, 0.0, path.string()};
      return std::nullopt;
    }
    if (s.rfind("expr:", 0) == 0) {
      const auto text = trim(s.substr(5));
      try {
        Expression::parse(text);
      } catch (const std::exception& e) {
        return std::string(e.what());
      }
      ref(c) = {SourceSpec::Kind::expression, 0.0, text};
      return std::nullopt;
    }
    return "expected a number, \"file:PATH\" or \"expr:TEXT\", got '" + s + "'";
  };
}

std::string source_text(const SourceSpec& s) {
  switch (s.kind) {
    case SourceSpec::Kind::constant: return short_real(s.value);
    case SourceSpec::Kind::file: return quote("file:" + s.text);
    case SourceSpec::Kind::expression: return quote("expr:" + s.text);
  }
  return {};
}

Setter kind_setter(std::function<ScenarioKind&(ScenarioConfig&)> ref) {
  return [ref](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    const auto k = parse_kind(s);
    if (!k) return "unknown scenario kind '" + s + "'";
    ref(c) = *k;
    return std::nullopt;
  };
}

const std::vector<KeySpec>& schema();

Setter parameter_setter() {
  return [](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    std::string s;
    if (auto e = scalar(v, s)) return e;
    for (const auto& k : schema()) {
      const auto name = k.section.empty() ? k.key : k.section + "." + k.key;
      if (name == s) {
        if (!k.numeric) return "'" + s + "' is not a numeric key";
        c.sweep.parameter = s;
        return std::nullopt;
      }
    }
    return "unknown key '" + s + "'";
  };
}

Setter claims_setter() {
  return [](ScenarioConfig& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
    if (!v.is_list) return "expected a list of condition names";
    std::vector<std::string> out;
    for (const auto& s : v.items) {
      try {
        parse_condition(s);
      } catch (const std::exception& e) {
        return std::string(e.what());
      }
      out.push_back(s);
    }
    c.certificate.claims = out;
    return std::nullopt;
  };
}

using C = ScenarioConfig;

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = [] {
    std::vector<KeySpec> k;
    auto real = [&](std::string sec, std::string key, std::function<double&(C&)> ref) {
      k.push_back({sec, key, true, real_setter(ref),
                   [ref](const C& c) { return std::optional{short_real(ref(const_cast<C&>(c)))}; }});
    };
    auto opt_real = [&](std::string sec, std::string key, std::function<std::optional<double>&(C&)> ref) {
      k.push_back({sec, key, true, optional_real_setter(ref), [ref](const C& c) -> std::optional<std::string> {
                     const auto& v = ref(const_cast<C&>(c));
                     if (!v) return std::nullopt;
                     return short_real(*v);
                   }});
    };
    auto count = [&](std::string sec, std::string key, std::function<std::size_t&(C&)> ref) {
      k.push_back({sec, key, true, count_setter(ref),
                   [ref](const C& c) { return std::optional{std::to_string(ref(const_cast<C&>(c)))}; }});
    };
    auto boolean = [&](std::string sec, std::string key, std::function<bool&(C&)> ref) {
      k.push_back({sec, key, false, bool_setter(ref), [ref](const C& c) {
                     return std::optional<std::string>{ref(const_cast<C&>(c)) ? "true" : "false"};
                   }});
    };
    auto word = [&](std::string sec, std::string key, std::function<std::string&(C&)> ref,
                    std::vector<std::string> allowed) {
      k.push_back({sec, key, false, word_setter(ref, allowed),
                   [ref](const C& c) { return std::optional{ref(const_cast<C&>(c))}; }});
    };
    auto path = [&](std::string sec, std::string key, std::function<std::string&(C&)> ref) {
      k.push_back({sec, key, false, path_setter(ref), [ref](const C& c) -> std::optional<std::string> {
                     const auto& v = ref(const_cast<C&>(c));
                     if (v.empty()) return std::nullopt;
                     return quote(v);
                   }});
    };
    auto list = [&](std::string sec, std::string key, std::function<std::vector<double>&(C&)> ref) {
      k.push_back({sec, key, false, list_setter(ref),
                   [ref](const C& c) { return std::optional{list_text(ref(const_cast<C&>(c)))}; }});
    };
    auto source = [&](std::string sec, std::string key, std::function<SourceSpec&(C&)> ref) {
      const bool numeric = true;  // constant sources can be swept
      k.push_back({sec, key, numeric, source_setter(ref),
                   [ref](const C& c) { return std::optional{source_text(ref(const_cast<C&>(c)))}; }});
    };

    k.push_back({"", "kind", false, kind_setter([](C& c) -> ScenarioKind& { return c.kind; }),
                 [](const C& c) { return std::optional{kind_name(c.kind)}; }});
    k.push_back({"", "seed", true,
                 [](C& c, const RawValue& v, const fs::path& b) {
                   std::size_t s = 0;
                   auto e = count_setter([&s](C&) -> std::size_t& { return s; })(c, v, b);
                   if (!e) c.seed = s;
                   return e;
                 },
                 [](const C& c) { return std::optional{std::to_string(c.seed)}; }});
    k.push_back({"", "out_dir", false,
                 [](C& c, const RawValue& v, const fs::path&) {
                   std::string s;
                   auto e = scalar(v, s);
                   if (!e) c.out_dir = s;
                   return e;
                 },
                 [](const C& c) { return std::optional{quote(c.out_dir)}; }});
    k.push_back({"", "output", false,
                 [](C& c, const RawValue& v, const fs::path&) -> std::optional<std::string> {
                   std::string s;
                   if (auto e = scalar(v, s)) return e;
                   const fs::path p(s);
                   if (p.is_absolute() || p.has_parent_path() || s == "." || s == "..")
                     return "output must be a plain file name inside out_dir";
                   c.output = s;
                   return std::nullopt;
                 },
                 [](const C& c) -> std::optional<std::string> {
                   if (c.output.empty()) return std::nullopt;
                   return quote(c.output);
                 }});

    k.push_back({"grid", "origin", false, pair_setter([](C& c, std::array<double, 2> v) { c.grid.origin = v; }),
                 [](const C& c) { return std::optional{list_text({c.grid.origin[0], c.grid.origin[1]})}; }});
    k.push_back({"grid", "extent", false, pair_setter([](C& c, std::array<double, 2> v) { c.grid.extent = v; }),
                 [](const C& c) { return std::optional{list_text({c.grid.extent[0], c.grid.extent[1]})}; }});
    count("grid", "cells", [](C& c) -> std::size_t& { return c.grid.cells; });

    word("integrand", "kind", [](C& c) -> std::string& { return c.integrand.kind; }, {"dirichlet"});
    real("integrand", "p", [](C& c) -> double& { return c.integrand.p; });
    source("integrand", "g", [](C& c) -> SourceSpec& { return c.integrand.g; });
    source("integrand", "lam", [](C& c) -> SourceSpec& { return c.integrand.lam; });

    word("solver", "method", [](C& c) -> std::string& { return c.solver.method; }, {"newton", "nlcg"});
    real("solver", "tol", [](C& c) -> double& { return c.solver.tol; });
    real("solver", "step_tol", [](C& c) -> double& { return c.solver.step_tol; });
    count("solver", "max_iter", [](C& c) -> std::size_t& { return c.solver.max_iter; });
    list("solver", "deltas", [](C& c) -> std::vector<double>& { return c.solver.deltas; });

    list("aux", "sigmas", [](C& c) -> std::vector<double>& { return c.aux.sigmas; });
    real("aux", "tau", [](C& c) -> double& { return c.aux.tau; });
    count("aux", "rounds", [](C& c) -> std::size_t& { return c.aux.rounds; });
    count("aux", "stage_max_iter", [](C& c) -> std::size_t& { return c.aux.stage_max_iter; });
    real("aux", "tol_flip", [](C& c) -> double& { return c.aux.tol_flip; });
    count("aux", "patch_radius", [](C& c) -> std::size_t& { return c.aux.patch_radius; });
    boolean("aux", "prune", [](C& c) -> bool& { return c.aux.prune; });

    real("eigen", "tol", [](C& c) -> double& { return c.eigen.tol; });
    count("eigen", "max_iter", [](C& c) -> std::size_t& { return c.eigen.max_iter; });

    word("target", "shape", [](C& c) -> std::string& { return c.target.shape; },
         {"disc", "annulus", "slit", "square", "full", "file"});
    k.push_back({"target", "center", false, pair_setter([](C& c, std::array<double, 2> v) { c.target.center = v; }),
                 [](const C& c) -> std::optional<std::string> {
                   if (!c.target.center) return std::nullopt;
                   return list_text({(*c.target.center)[0], (*c.target.center)[1]});
                 }});
    real("target", "radius", [](C& c) -> double& { return c.target.radius; });
    real("target", "inner", [](C& c) -> double& { return c.target.inner; });
    real("target", "half", [](C& c) -> double& { return c.target.half; });
    path("target", "file", [](C& c) -> std::string& { return c.target.file; });

    path("geometry", "field", [](C& c) -> std::string& { return c.geometry.field; });
    opt_real("geometry", "eps_min", [](C& c) -> std::optional<double>& { return c.geometry.eps_min; });
    opt_real("geometry", "eps_max", [](C& c) -> std::optional<double>& { return c.geometry.eps_max; });
    count("geometry", "rows", [](C& c) -> std::size_t& { return c.geometry.rows; });
    count("geometry", "coarea_samples", [](C& c) -> std::size_t& { return c.geometry.coarea_samples; });
    boolean("geometry", "diagnose", [](C& c) -> bool& { return c.geometry.diagnose; });

    k.push_back({"sweep", "base", false, kind_setter([](C& c) -> ScenarioKind& { return c.sweep.base; }),
                 [](const C& c) { return std::optional{kind_name(c.sweep.base)}; }});
    k.push_back({"sweep", "parameter", false, parameter_setter(), [](const C& c) -> std::optional<std::string> {
                   if (c.sweep.parameter.empty()) return std::nullopt;
                   return c.sweep.parameter;
                 }});
    list("sweep", "values", [](C& c) -> std::vector<double>& { return c.sweep.values; });

    real("certificate", "c", [](C& c) -> double& { return c.certificate.c; });
    real("certificate", "alpha", [](C& c) -> double& { return c.certificate.alpha; });
    real("certificate", "C", [](C& c) -> double& { return c.certificate.C; });
    source("certificate", "a", [](C& c) -> SourceSpec& { return c.certificate.a; });
    source("certificate", "b", [](C& c) -> SourceSpec& { return c.certificate.b; });
    source("certificate", "offset", [](C& c) -> SourceSpec& { return c.certificate.offset; });
    real("certificate", "gamma", [](C& c) -> double& { return c.certificate.gamma; });
    real("certificate", "sigma", [](C& c) -> double& { return c.certificate.sigma; });
    real("certificate", "q", [](C& c) -> double& { return c.certificate.q; });
    real("certificate", "K", [](C& c) -> double& { return c.certificate.K; });
    opt_real("certificate", "sobolev_power", [](C& c) -> std::optional<double>& { return c.certificate.sobolev_power; });
    k.push_back({"certificate", "claims", false, claims_setter(), [](const C& c) {
                   std::string out = "[";
                   for (std::size_t i = 0; i < c.certificate.claims.size(); ++i)
                     out += (i ? ", " : "") + c.certificate.claims[i];
                   return std::optional{out + "]"};
                 }});
    opt_real("certificate", "lambda1", [](C& c) -> std::optional<double>& { return c.certificate.lambda1; });
    count("certificate", "samples", [](C& c) -> std::size_t& { return c.certificate.samples; });
    real("certificate", "s_max", [](C& c) -> double& { return c.certificate.s_max; });
    real("certificate", "z_max", [](C& c) -> double& { return c.certificate.z_max; });
    return k;
  }();
  return keys;
}

const std::vector<std::string>& section_names() {
  static const std::vector<std::string> names{"grid",   "integrand", "solver", "aux",
                                              "eigen",  "target",    "geometry", "sweep",
                                              "certificate"};
  return names;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggestion(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::max<std::size_t>(2, word.size() / 3) + 1;
  for (const auto& c : candidates) {
    const auto d = edit_distance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best.empty() ? std::string{} : "; did you mean '" + best + "'?";
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : schema())
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

std::vector<std::string> keys_in(const std::string& section) {
  std::vector<std::string> out;
  for (const auto& k : schema())
    if (k.section == section) out.push_back(k.key);
  return out;
}

struct PathError {
  std::string path;
  std::string message;
};

std::vector<PathError> cross_checks(const ScenarioConfig& c) {
  std::vector<PathError> e;
  if (!(c.integrand.p > 1.0))
    e.push_back({"integrand.p", "exponent must exceed 1 (got " + short_real(c.integrand.p) + ")"});
  if (c.integrand.lam.kind == SourceSpec::Kind::constant && c.integrand.lam.value < 0.0)
    e.push_back({"integrand.lam", "lam must be nonnegative"});
  if (!(c.grid.extent[0] > 0.0 && c.grid.extent[1] > 0.0))
    e.push_back({"grid.extent", "extent must be positive"});
  else {
    try {
      make_grid_cells({c.grid.origin[0], c.grid.origin[1]}, {c.grid.extent[0], c.grid.extent[1]}, c.grid.cells);
    } catch (const std::exception& ex) {
      e.push_back({"grid.cells", ex.what()});
    }
  }
  if (!(c.solver.tol > 0.0)) e.push_back({"solver.tol", "tolerance must be positive"});
  if (!(c.solver.step_tol > 0.0)) e.push_back({"solver.step_tol", "tolerance must be positive"});
  if (c.solver.max_iter == 0) e.push_back({"solver.max_iter", "iteration cap must be positive"});
  if (c.solver.deltas.empty()) e.push_back({"solver.deltas", "need at least one smoothing width"});
  for (std::size_t i = 0; i < c.solver.deltas.size(); ++i)
    if (!(c.solver.deltas[i] > 0.0) || (i && !(c.solver.deltas[i] < c.solver.deltas[i - 1]))) {
      e.push_back({"solver.deltas", "smoothing widths must be positive and decreasing"});
      break;
    }
  try {
    AuxParams a;
    a.sigmas = c.aux.sigmas;
    a.tau = c.aux.tau;
    a.stage_max_iter = c.aux.stage_max_iter;
    a.tol_flip = c.aux.tol_flip;
    a.inner.tol = 1.0;  // solver keys are checked above
    a.inner.max_iter = 1;
    a.validate();
  } catch (const std::exception& ex) {
    e.push_back({"aux.sigmas", ex.what()});
  }
  if (!(c.eigen.tol > 0.0)) e.push_back({"eigen.tol", "tolerance must be positive"});
  const bool uses_target = c.kind == ScenarioKind::torsion || c.kind == ScenarioKind::counterexample ||
                           (c.kind == ScenarioKind::sweep &&
                            (c.sweep.base == ScenarioKind::torsion || c.sweep.base == ScenarioKind::counterexample));
  if (uses_target && c.target.shape == "file" && c.target.file.empty())
    e.push_back({"target.shape", "shape 'file' needs target.file"});
  if (!(c.target.radius > 0.0)) e.push_back({"target.radius", "radius must be positive"});
  if (!(c.target.inner > 0.0 && c.target.inner < c.target.radius))
    e.push_back({"target.inner", "inner radius must lie in (0, radius)"});
  if (!(c.target.half > 0.0)) e.push_back({"target.half", "half width must be positive"});
  if (c.kind == ScenarioKind::geometry && c.geometry.field.empty())
    e.push_back({"geometry.field", "geometry needs geometry.field"});
  if (c.geometry.eps_min && !(*c.geometry.eps_min > 0.0))
    e.push_back({"geometry.eps_min", "levels must be positive"});
  if (c.geometry.eps_min && c.geometry.eps_max && !(*c.geometry.eps_max >= *c.geometry.eps_min))
    e.push_back({"geometry.eps_max", "eps_max must not be below eps_min"});
  if (c.geometry.rows == 0) e.push_back({"geometry.rows", "need at least one row"});
  if (c.geometry.coarea_samples < 2) e.push_back({"geometry.coarea_samples", "need at least two samples"});
  if (c.kind == ScenarioKind::sweep) {
    if (c.sweep.parameter.empty()) e.push_back({"sweep.parameter", "sweep needs sweep.parameter"});
    if (c.sweep.values.empty()) e.push_back({"sweep.values", "sweep needs sweep.values"});
    if (c.sweep.base == ScenarioKind::sweep || c.sweep.base == ScenarioKind::check ||
        c.sweep.base == ScenarioKind::geometry)
      e.push_back({"sweep.base", "sweep base must be eigen, torsion, solve-aux or counterexample"});
  }
  if (c.certificate.samples == 0) e.push_back({"certificate.samples", "need at least one sample"});
  if (c.out_dir.empty()) e.push_back({"out_dir", "out_dir must not be empty"});
  return e;
}

void set_key(ScenarioConfig& cfg, const std::string& section, const std::string& key, const RawValue& raw,
             const fs::path& base, std::size_t line, std::vector<ConfigError>& errors) {
  const auto* spec = find_key(section, key);
  if (!spec) {
    const std::string where = section.empty() ? "top level" : "[" + section + "]";
    errors.push_back({line, "unknown key '" + key + "' in " + where + suggestion(key, keys_in(section))});
    return;
  }
  if (auto e = spec->set(cfg, raw, base)) errors.push_back({line, key + ": " + *e});
}

}  // namespace

std::vector<ConfigError> validate_config(const ScenarioConfig& cfg) {
  std::vector<ConfigError> out;
  for (const auto& e : cross_checks(cfg)) out.push_back({0, e.path + ": " + e.message});
  return out;
}

ScenarioConfig parse_config(const std::string& text, const fs::path& base_dir) {
  ScenarioConfig cfg;
  std::vector<ConfigError> errors;
  std::map<std::string, std::size_t> seen;  // key path -> line
  std::string section;
  bool section_known = true;
  std::istringstream is(text);
  std::string raw_line;
  std::size_t lineno = 0;
  while (std::getline(is, raw_line)) {
    ++lineno;
    // strip comments outside quotes
    std::string line;
    bool in_quote = false;
    for (std::size_t i = 0; i < raw_line.size(); ++i) {
      const char ch = raw_line[i];
      if (ch == '"' && (i == 0 || raw_line[i - 1] != '\\')) in_quote = !in_quote;
      if (ch == '#' && !in_quote) break;
      line += ch;
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back({lineno, "malformed section header"});
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      const auto& names = section_names();
      section_known = std::find(names.begin(), names.end(), section) != names.end();
      if (!section_known)
        errors.push_back({lineno, "unknown section [" + section + "]" + suggestion(section, names)});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back({lineno, "expected 'key = value'"});
      continue;
    }
    if (!section_known) continue;
    const auto key = trim(line.substr(0, eq));
    RawValue raw;
    if (auto e = tokenize(line.substr(eq + 1), raw)) {
      errors.push_back({lineno, key + ": " + *e});
      continue;
    }
    const auto path = section.empty() ? key : section + "." + key;
    if (auto it = seen.find(path); it != seen.end()) {
      errors.push_back({lineno, "duplicate key '" + path + "' (first set on line " + std::to_string(it->second) + ")"});
      continue;
    }
    seen[path] = lineno;
    set_key(cfg, section, key, raw, base_dir, lineno, errors);
  }
  for (const auto& e : cross_checks(cfg)) {
    const auto it = seen.find(e.path);
    errors.push_back({it == seen.end() ? 0 : it->second, e.path + ": " + e.message});
  }
  if (!errors.empty()) throw ConfigParseError(std::move(errors));
  return cfg;
}

void apply_override(ScenarioConfig& cfg, const std::string& path, const std::string& value,
                    const fs::path& base_dir) {
  const auto dot = path.find('.');
  const std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
  const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
  std::vector<ConfigError> errors;
  RawValue raw;
  if (auto e = tokenize(value, raw)) {
    errors.push_back({0, path + ": " + *e});
  } else {
    set_key(cfg, section, key, raw, base_dir, 0, errors);
  }
  if (!errors.empty()) throw ConfigParseError(std::move(errors));
}

std::string print_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  std::string current;
  for (const auto& k : schema()) {
    const auto v = k.print(cfg);
    if (!v) continue;
    if (k.section != current) {
      os << "\n[" << k.section << "]\n";
      current = k.section;
    }
    os << k.key << " = " << *v << '\n';
  }
  return os.str();
}

GridSpec make_scenario_grid(const ScenarioConfig& cfg) {
  return make_grid_cells({cfg.grid.origin[0], cfg.grid.origin[1]}, {cfg.grid.extent[0], cfg.grid.extent[1]},
                         cfg.grid.cells);
}

IntegrandSpec make_integrand(const ScenarioConfig& cfg, const GridSpec& g) {
  return dirichlet_energy(cfg.integrand.p, materialize(cfg.integrand.g, g), materialize(cfg.integrand.lam, g));
}

StateSolveOptions make_solve_options(const ScenarioConfig& cfg) {
  StateSolveOptions o;
  o.method = cfg.solver.method == "nlcg" ? StateSolveOptions::Method::nlcg : StateSolveOptions::Method::newton;
  o.tol = cfg.solver.tol;
  o.step_tol = cfg.solver.step_tol;
  o.max_iter = cfg.solver.max_iter;
  o.deltas = cfg.solver.deltas;
  return o;
}

AuxParams make_aux_params(const ScenarioConfig& cfg) {
  AuxParams a;
  a.sigmas = cfg.aux.sigmas;
  a.tau = cfg.aux.tau;
  a.rounds = cfg.aux.rounds;
  a.stage_max_iter = cfg.aux.stage_max_iter;
  a.tol_flip = cfg.aux.tol_flip;
  a.patch_radius = cfg.aux.patch_radius;
  a.prune = cfg.aux.prune;
  a.inner = make_solve_options(cfg);
  return a;
}

DomainMask make_target(const ScenarioConfig& cfg, const GridSpec& g) {
  const auto& t = cfg.target;
  const Point c = t.center ? Point{(*t.center)[0], (*t.center)[1]}
                           : Point{g.origin().x + 0.5 * g.width(), g.origin().y + 0.5 * g.height()};
  if (t.shape == "disc") return disc_mask(g, c, t.radius);
  if (t.shape == "annulus") return annulus_mask(g, c, t.inner, t.radius);
  if (t.shape == "slit") return slit_square_mask(g, c, t.half);
  if (t.shape == "square") return rectangle_mask(g, {c.x - t.half, c.y - t.half}, {c.x + t.half, c.y + t.half});
  if (t.shape == "full") return full_mask(g);
  auto m = load_mask(t.file);
  if (!(m.grid == g)) throw ConfigurationError("mask '" + t.file + "' is on a different grid");
  return m;
}

GrowthCertificate make_certificate(const ScenarioConfig& cfg, const GridSpec& g) {
  const auto& s = cfg.certificate;
  GrowthCertificate c;
  c.c = s.c;
  c.alpha = s.alpha;
  c.C = s.C;
  c.a = materialize(s.a, g);
  c.b = materialize(s.b, g);
  c.offset = materialize(s.offset, g);
  c.gamma = s.gamma;
  c.sigma = s.sigma;
  c.q = s.q;
  c.K = s.K;
  if (s.sobolev_power) c.sobolev_power = *s.sobolev_power;
  for (const auto& name : s.claims) {
    switch (parse_condition(name)) {
      case Condition::lower_growth: c.claims_lower_growth = true; break;
      case Condition::strict_lower_growth: c.claims_strict_lower_growth = true; break;
      case Condition::state_lipschitz: c.claims_state_lipschitz = true; break;
      case Condition::two_sided_growth: c.claims_two_sided_growth = true; break;
      default: break;  // convexity and the zero level are always checked
    }
  }
  return c;
}

}  // namespace qs
