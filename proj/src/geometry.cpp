#include "qs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qs {

namespace {

/// Area of {v <= t} for the linear function with sorted vertex values on a
/// triangle of area a.
double area_below(double a, double v0, double v1, double v2, double t) {
  if (t >= v2) return a;
  if (t <= v0) return 0.0;
  if (t <= v1) return a * (t - v0) * (t - v0) / ((v1 - v0) * (v2 - v0));
  return a * (1.0 - (v2 - t) * (v2 - t) / ((v2 - v0) * (v2 - v1)));
}

template <class Fn>
void for_triangles(const ScalarField& u, Fn&& fn) {
  const auto& g = u.grid;
  for (std::size_t t = 0; t < g.triangle_count(); ++t) {
    const auto n = g.triangle_nodes(t);
    fn(t, n, std::abs(u[n[0]]), std::abs(u[n[1]]), std::abs(u[n[2]]));
  }
}

}  // namespace

ScalarField truncate(const ScalarField& u, double eps) {
  if (eps < 0.0) throw std::invalid_argument("truncate: eps must be nonnegative");
  ScalarField out = u;
  for (auto& v : out.values) v = v > eps ? v - eps : v < -eps ? v + eps : 0.0;
  return out;
}

Band sublevel_band(const ScalarField& u, double eps, double p) {
  const auto& g = u.grid;
  const double h = g.h();
  const double a = 0.5 * g.cell_area();
  Band b;
  for_triangles(u, [&](std::size_t t, const auto&, double x, double y, double z) {
    if (x == 0.0 && y == 0.0 && z == 0.0) return;
    double v[3] = {x, y, z};
    std::sort(v, v + 3);
    // {v <= 0} has measure zero unless the triangle vanishes identically
    const double m = area_below(a, v[0], v[1], v[2], eps);
    if (m == 0.0) return;
    const Vec2 gr = triangle_gradient(t, x, y, z, h);
    b.measure += m;
    b.p_dirichlet += m * std::pow(std::hypot(gr[0], gr[1]), p);
  });
  return b;
}

double level_set_perimeter(const ScalarField& u, double t) {
  double total = 0.0;
  const auto& g = u.grid;
  for_triangles(u, [&](std::size_t, const auto& n, double x, double y, double z) {
    const double v[3] = {x, y, z};
    const bool in[3] = {x > t, y > t, z > t};
    if (in[0] == in[1] && in[1] == in[2]) return;
    Point pts[3];
    for (int i = 0; i < 3; ++i) pts[i] = g.node_point(n[i]);
    Point cross[2];
    int k = 0;
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3;
      if (in[i] == in[j]) continue;
      const double s = (t - v[i]) / (v[j] - v[i]);
      cross[k++] = {pts[i].x + s * (pts[j].x - pts[i].x), pts[i].y + s * (pts[j].y - pts[i].y)};
    }
    total += std::hypot(cross[1].x - cross[0].x, cross[1].y - cross[0].y);
  });
  return total;
}

double coarea_profile(const ScalarField& u, double eps, std::size_t n_samples) {
  if (!(eps > 0.0)) throw std::invalid_argument("coarea_profile: eps must be positive");
  if (n_samples < 2) throw std::invalid_argument("coarea_profile: need at least two samples");
  const double dt = eps / static_cast<double>(n_samples);
  const double first = level_set_perimeter(u, dt);
  double sum = 0.5 * first + first;
  for (std::size_t i = 2; i < n_samples; ++i) sum += level_set_perimeter(u, dt * static_cast<double>(i));
  sum += 0.5 * level_set_perimeter(u, eps);
  return sum * dt;
}

std::size_t sign_change_triangles(const ScalarField& u) {
  std::size_t count = 0;
  const auto& g = u.grid;
  for (std::size_t t = 0; t < g.triangle_count(); ++t) {
    const auto n = g.triangle_nodes(t);
    bool pos = false, neg = false;
    for (auto k : n) {
      pos = pos || u[k] > 0.0;
      neg = neg || u[k] < 0.0;
    }
    count += pos && neg;
  }
  return count;
}

std::vector<double> log_spaced(double a, double b, std::size_t n) {
  if (!(a > 0.0 && b >= a)) throw std::invalid_argument("log_spaced: need 0 < a <= b");
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> out(n);
  const double la = std::log(a), lb = std::log(b);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = a;
  out.back() = b;
  return out;
}

GeometryReport finite_perimeter_diagnostic(const ScalarField& u, std::vector<double> eps_range, double p) {
  if (eps_range.empty()) throw std::invalid_argument("finite_perimeter_diagnostic: empty eps range");
  std::sort(eps_range.begin(), eps_range.end());
  if (!(eps_range.front() > 0.0)) throw std::invalid_argument("finite_perimeter_diagnostic: levels must be positive");

  GeometryReport r;
  r.p = p;
  r.sign_change_triangles = sign_change_triangles(u);
  for (double e : eps_range) {
    GeometryRow row;
    row.eps = e;
    const auto b = sublevel_band(u, e, p);
    row.band_measure = b.measure;
    row.band_p_dirichlet = b.p_dirichlet;
    row.perimeter = level_set_perimeter(u, e);
    row.ratio = (b.measure + b.p_dirichlet) / e;
    r.c_fit = std::max(r.c_fit, row.ratio);
    row.running_c_fit = r.c_fit;
    r.rows.push_back(row);
  }

  // dyadic bands (top/2^{k+1}, top/2^k], counted down from the largest level
  const double top = eps_range.back();
  std::size_t i = r.rows.size();
  for (double hi = top; i > 0; hi *= 0.5) {
    const double lo = 0.5 * hi;
    double best = -1.0, best_eps = 0.0;
    while (i > 0 && r.rows[i - 1].eps > lo) {
      const auto& row = r.rows[i - 1];
      if (best < 0.0 || row.perimeter < best) {
        best = row.perimeter;
        best_eps = row.eps;
      }
      --i;
    }
    if (best >= 0.0) {
      r.delta.push_back(best_eps);
      r.delta_perimeter.push_back(best);
      r.sup_delta_perimeter = std::max(r.sup_delta_perimeter, best);
    }
  }
  return r;
}

void write_geometry_csv(std::ostream& os, const GeometryReport& r) {
  os << "eps,band_measure,band_p_dirichlet,perimeter,running_c_fit\n";
  for (const auto& row : r.rows)
    os << format_real(row.eps) << ',' << format_real(row.band_measure) << ',' << format_real(row.band_p_dirichlet)
       << ',' << format_real(row.perimeter) << ',' << format_real(row.running_c_fit) << '\n';
}

}  // namespace qs
