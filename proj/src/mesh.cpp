#include "qs/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qs {

GridSpec make_grid(Point origin, Vec2 extent, std::size_t nx, std::size_t ny) {
  if (!(extent[0] > 0.0) || !(extent[1] > 0.0))
    throw ConfigurationError("grid extent must be positive");
  if (nx < 3 || ny < 3) throw ConfigurationError("grid needs at least 3 nodes per axis");
  const double hx = extent[0] / static_cast<double>(nx - 1);
  const double hy = extent[1] / static_cast<double>(ny - 1);
  if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy)) {
    std::ostringstream os;
    os << "non-square cells: h_x = " << format_real(hx) << " vs h_y = " << format_real(hy);
    throw ConfigurationError(os.str());
  }
  GridSpec g;
  g.origin_ = origin;
  g.nx_ = nx;
  g.ny_ = ny;
  g.h_ = hx;
  return g;
}

GridSpec make_grid_cells(Point origin, Vec2 extent, std::size_t cells) {
  if (cells < 2) throw ConfigurationError("grid needs at least 2 cells per axis");
  const double h = extent[0] / static_cast<double>(cells);
  const double ycells = extent[1] / h;
  const double rounded = std::round(ycells);
  if (rounded < 2.0 || std::abs(ycells - rounded) > 1e-9 * std::max(1.0, rounded)) {
    std::ostringstream os;
    os << "extent height " << format_real(extent[1]) << " is not a multiple of h = " << format_real(h);
    throw ConfigurationError(os.str());
  }
  return make_grid(origin, extent, cells + 1, static_cast<std::size_t>(rounded) + 1);
}

std::vector<std::size_t> GridSpec::node_cells(std::size_t k) const {
  std::vector<std::size_t> out;
  out.reserve(4);
  const auto i = node_i(k);
  const auto j = node_j(k);
  for (std::size_t dj = 0; dj < 2; ++dj) {
    for (std::size_t di = 0; di < 2; ++di) {
      if (i < di || j < dj) continue;
      const auto ci = i - di;
      const auto cj = j - dj;
      if (ci + 1 >= nx_ || cj + 1 >= ny_) continue;
      out.push_back(cell(ci, cj));
    }
  }
  return out;
}

double GridSpec::node_area(std::size_t k) const {
  const auto i = node_i(k);
  const auto j = node_j(k);
  const bool has_i = i + 1 < nx_;
  const bool has_im = i > 0;
  const bool has_j = j + 1 < ny_;
  const bool has_jm = j > 0;
  int tris = 0;
  if (has_i && has_j) tris += 1;    // cell (i, j): lower-left only
  if (has_im && has_j) tris += 2;   // cell (i-1, j): node is n10
  if (has_i && has_jm) tris += 2;   // cell (i, j-1): node is n01
  if (has_im && has_jm) tris += 1;  // cell (i-1, j-1): upper-right only
  return static_cast<double>(tris) * h_ * h_ / 6.0;
}

ScalarField::ScalarField(const GridSpec& g, double fill, bool zero_on_boundary)
    : grid(g), values(g.node_count(), fill), boundary_zero(zero_on_boundary) {
  if (zero_on_boundary) {
    for (std::size_t k = 0; k < g.node_count(); ++k)
      if (g.on_boundary(k)) values[k] = 0.0;
  }
}

double ScalarField::interpolate(Point p) const {
  const double h = grid.h();
  const double fx = std::clamp((p.x - grid.origin().x) / h, 0.0, static_cast<double>(grid.nx() - 1));
  const double fy = std::clamp((p.y - grid.origin().y) / h, 0.0, static_cast<double>(grid.ny() - 1));
  auto i = static_cast<std::size_t>(fx);
  auto j = static_cast<std::size_t>(fy);
  i = std::min(i, grid.nx() - 2);
  j = std::min(j, grid.ny() - 2);
  const double xi = fx - static_cast<double>(i);
  const double eta = fy - static_cast<double>(j);
  const auto n = grid.cell_nodes(grid.cell(i, j));
  const double u00 = values[n[0]], u10 = values[n[1]], u01 = values[n[2]], u11 = values[n[3]];
  if (xi + eta <= 1.0) return u00 + xi * (u10 - u00) + eta * (u01 - u00);
  return u11 + (xi - 1.0) * (u11 - u01) + (eta - 1.0) * (u11 - u10);
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::is_boundary_zero() const {
  for (std::size_t k = 0; k < grid.node_count(); ++k)
    if (grid.on_boundary(k) && values[k] != 0.0) return false;
  return true;
}

DomainMask::DomainMask(const GridSpec& g, bool fill)
    : grid(g), active(g.cell_count(), fill ? 1 : 0) {}

std::size_t DomainMask::active_count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

DomainMask DomainMask::complement() const {
  DomainMask out(grid);
  for (std::size_t c = 0; c < active.size(); ++c) out.active[c] = active[c] ? 0 : 1;
  return out;
}

DomainMask DomainMask::intersection(const DomainMask& other) const {
  if (!(grid == other.grid)) throw std::invalid_argument("mask grids differ");
  DomainMask out(grid);
  for (std::size_t c = 0; c < active.size(); ++c) out.active[c] = (active[c] && other.active[c]) ? 1 : 0;
  return out;
}

DomainMask DomainMask::unite(const DomainMask& other) const {
  if (!(grid == other.grid)) throw std::invalid_argument("mask grids differ");
  DomainMask out(grid);
  for (std::size_t c = 0; c < active.size(); ++c) out.active[c] = (active[c] || other.active[c]) ? 1 : 0;
  return out;
}

bool DomainMask::subset_of(const DomainMask& other) const {
  for (std::size_t c = 0; c < active.size(); ++c)
    if (active[c] && !other.active[c]) return false;
  return true;
}

std::vector<std::uint8_t> DomainMask::node_closure() const {
  std::vector<std::uint8_t> out(grid.node_count(), 0);
  for (std::size_t c = 0; c < active.size(); ++c) {
    if (!active[c]) continue;
    for (auto k : grid.cell_nodes(c)) out[k] = 1;
  }
  return out;
}

std::vector<std::uint8_t> DomainMask::interior_nodes() const {
  std::vector<std::uint8_t> out(grid.node_count(), 0);
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    if (grid.on_boundary(k)) continue;
    bool all = true;
    for (auto c : grid.node_cells(k)) all = all && active[c];
    out[k] = all ? 1 : 0;
  }
  return out;
}

CellGradientField gradient(const ScalarField& u) {
  const auto& g = u.grid;
  CellGradientField out{g, std::vector<Vec2>(g.triangle_count())};
  for (std::size_t t = 0; t < g.triangle_count(); ++t) {
    const auto n = g.triangle_nodes(t);
    out.grad[t] = triangle_gradient(t, u[n[0]], u[n[1]], u[n[2]], g.h());
  }
  return out;
}

double integrate_cellwise(const GridSpec& g, std::span<const double> per_triangle) {
  if (per_triangle.size() != g.triangle_count())
    throw std::invalid_argument("integrate_cellwise: one sample per triangle required");
  double sum = 0.0;
  for (double v : per_triangle) sum += v;
  return sum * 0.5 * g.cell_area();
}

double measure(const DomainMask& m) {
  return static_cast<double>(m.active_count()) * m.grid.cell_area();
}

ScalarField restrict_to(const ScalarField& u, const DomainMask& m) {
  if (!(u.grid == m.grid)) throw std::invalid_argument("restrict: field and mask grids differ");
  ScalarField out = u;
  const auto closure = m.node_closure();
  for (std::size_t k = 0; k < out.size(); ++k)
    if (!closure[k]) out.values[k] = 0.0;
  return out;
}

double symmetric_difference(const DomainMask& a, const DomainMask& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("mask grids differ");
  std::size_t n = 0;
  for (std::size_t c = 0; c < a.active.size(); ++c) n += (a.active[c] != b.active[c]) ? 1 : 0;
  return static_cast<double>(n) * a.grid.cell_area();
}

std::size_t boundary_cell_count(const DomainMask& m) {
  const auto& g = m.grid;
  const std::size_t cx = g.nx() - 1, cy = g.ny() - 1;
  std::size_t n = 0;
  for (std::size_t c = 0; c < m.active.size(); ++c) {
    if (!m.active[c]) continue;
    const auto i = g.cell_i(c), j = g.cell_j(c);
    const bool edge = i == 0 || j == 0 || i + 1 == cx || j + 1 == cy || !m.active[g.cell(i - 1, j)] ||
                      !m.active[g.cell(i + 1, j)] || !m.active[g.cell(i, j - 1)] ||
                      !m.active[g.cell(i, j + 1)];
    n += edge ? 1 : 0;
  }
  return n;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

double parse_real(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("dump: malformed number '" + tok + "'");
  return v;
}

void write_header(std::ostream& os, const char* kind, const GridSpec& g) {
  os << kind << '\n'
     << "nx " << g.nx() << '\n'
     << "ny " << g.ny() << '\n'
     << "origin " << format_real(g.origin().x) << ' ' << format_real(g.origin().y) << '\n'
     << "h " << format_real(g.h()) << '\n';
}

GridSpec read_header(std::istream& is, const std::string& kind) {
  std::string tag;
  if (!(is >> tag) || tag != kind) throw std::runtime_error("dump: expected '" + kind + "' header");
  std::size_t nx = 0, ny = 0;
  std::string key, ox, oy, hs;
  is >> key >> nx;
  if (key != "nx") throw std::runtime_error("dump: expected nx");
  is >> key >> ny;
  if (key != "ny") throw std::runtime_error("dump: expected ny");
  is >> key >> ox >> oy;
  if (key != "origin") throw std::runtime_error("dump: expected origin");
  is >> key >> hs;
  if (key != "h" || !is) throw std::runtime_error("dump: expected h");
  const double h = parse_real(hs);
  return make_grid({parse_real(ox), parse_real(oy)},
                   {h * static_cast<double>(nx - 1), h * static_cast<double>(ny - 1)}, nx, ny);
}

}  // namespace

void write_field(std::ostream& os, const ScalarField& u) {
  const auto& g = u.grid;
  write_header(os, "qs-field", g);
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      if (i) os << ' ';
      os << format_real(u[g.node(i, j)]);
    }
    os << '\n';
  }
}

ScalarField read_field(std::istream& is) {
  const auto g = read_header(is, "qs-field");
  ScalarField u(g, 0.0, false);
  std::string tok;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    if (!(is >> tok)) throw std::runtime_error("dump: truncated field data");
    u.values[k] = parse_real(tok);
  }
  u.boundary_zero = u.is_boundary_zero();
  return u;
}

void write_mask(std::ostream& os, const DomainMask& m) {
  const auto& g = m.grid;
  write_header(os, "qs-mask", g);
  for (std::size_t j = 0; j + 1 < g.ny(); ++j) {
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) os << (m[g.cell(i, j)] ? '1' : '0');
    os << '\n';
  }
}

DomainMask read_mask(std::istream& is) {
  const auto g = read_header(is, "qs-mask");
  DomainMask m(g);
  std::string row;
  for (std::size_t j = 0; j + 1 < g.ny(); ++j) {
    if (!(is >> row) || row.size() != g.nx() - 1) throw std::runtime_error("dump: bad mask row");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] != '0' && row[i] != '1') throw std::runtime_error("dump: mask entries must be 0/1");
      m.active[g.cell(i, j)] = row[i] == '1' ? 1 : 0;
    }
  }
  return m;
}

void save_field(const std::string& path, const ScalarField& u) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_field(os, u);
}

ScalarField load_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_field(is);
}

void save_mask(const std::string& path, const DomainMask& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_mask(os, m);
}

DomainMask load_mask(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_mask(is);
}

}  // namespace qs
