#include <cmath>
#include <sstream>

#include "doctest.h"
#include "qs/geometry.hpp"
#include "qs/shape_solver.hpp"
#include "qs/shapes.hpp"

using namespace qs;

namespace {

GridSpec unit(std::size_t cells) { return make_grid_cells({0, 0}, {1, 1}, cells); }

ScalarField cone(std::size_t cells) {
  const auto g = make_grid_cells({-1.25, -1.25}, {2.5, 2.5}, cells);
  return sample_field(g, [](Point p) { return std::max(0.0, 1.0 - std::hypot(p.x, p.y)); });
}

ScalarField affine_x(std::size_t cells) {
  return sample_field(unit(cells), [](Point p) { return p.x; }, false);
}

ScalarField wavy(std::size_t cells) {
  return sample_field(unit(cells), [](Point p) { return std::sin(3 * p.x) * std::sin(4 * p.y) + 0.3 * p.x * p.y; });
}

}  // namespace

TEST_CASE("truncate") {
  const auto u = wavy(10);
  CHECK(truncate(u, 0.0).values == u.values);
  const auto c = truncate(ScalarField(unit(4), 0.5, false), 0.2);
  for (double v : c.values) CHECK(v == doctest::Approx(0.3));
  const auto line = truncate(sample_field(unit(20), [](Point p) { return p.x - 0.5; }, false), 0.1);
  for (std::size_t k = 0; k < line.size(); ++k) {
    const double x = line.grid.node_point(k).x;
    if (std::abs(x - 0.5) <= 0.1 + 1e-12) CHECK(line[k] == doctest::Approx(0.0));
    else CHECK(line[k] == doctest::Approx(x - 0.5 - std::copysign(0.1, x - 0.5)));
  }
}

TEST_CASE("sublevel band") {
  const auto b = sublevel_band(cone(320), 0.1);
  const double exact = M_PI * (0.2 - 0.01);
  // P1 interpolant of the kink at r = 1 overshoots by an O(h) rim
  CHECK(b.measure == doctest::Approx(exact).epsilon(0.05));
  CHECK(b.p_dirichlet == doctest::Approx(b.measure).epsilon(0.05));
  const auto z = sublevel_band(ScalarField(unit(8)), 0.1);
  CHECK(z.measure == 0.0);
  CHECK(z.p_dirichlet == 0.0);
  const auto a = sublevel_band(affine_x(16), 0.25);
  CHECK(a.measure == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(a.p_dirichlet == doctest::Approx(0.25).epsilon(1e-13));
  const auto a3 = sublevel_band(affine_x(16), 0.3, 3.0);
  CHECK(a3.measure == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("level set perimeter") {
  CHECK(level_set_perimeter(cone(320), 0.5) == doctest::Approx(M_PI).epsilon(0.01));
  CHECK(level_set_perimeter(affine_x(16), 0.5) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(level_set_perimeter(affine_x(10), 0.37) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(level_set_perimeter(ScalarField(unit(8)), 0.2) == 0.0);
}

TEST_CASE("coarea profile") {
  CHECK(coarea_profile(cone(320), 0.1, 200) == doctest::Approx(M_PI * (0.2 - 0.01)).epsilon(0.01));
  CHECK(coarea_profile(affine_x(16), 0.25, 16) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(coarea_profile(ScalarField(unit(8)), 0.1, 16) == 0.0);
}

TEST_CASE("coarea identity on the interpolant") {
  const auto u = wavy(40);
  for (auto [t1, t2] : {std::pair{0.05, 0.3}, std::pair{0.2, 0.6}, std::pair{0.01, 0.9}}) {
    const std::size_t n = 2000;
    double integral = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = t1 + (t2 - t1) * static_cast<double>(i) / n;
      integral += (i == 0 || i == n ? 0.5 : 1.0) * level_set_perimeter(u, t);
    }
    integral *= (t2 - t1) / n;
    const double area_form = sublevel_band(u, t2, 1.0).p_dirichlet - sublevel_band(u, t1, 1.0).p_dirichlet;
    CHECK(integral == doctest::Approx(area_form).epsilon(0.005));
  }
}

TEST_CASE("band quantities grow with eps") {
  const auto u = wavy(30);
  Band prev;
  for (double e : log_spaced(1e-3, 1.0, 30)) {
    const auto b = sublevel_band(u, e, 2.0);
    CHECK(b.measure >= prev.measure);
    CHECK(b.p_dirichlet >= prev.p_dirichlet);
    prev = b;
  }
}

TEST_CASE("support over-approximates the superlevel set") {
  const auto u = wavy(30);
  const double tau = 1e-7;
  const double total = sublevel_band(u, u.max_abs(), 2.0).measure;
  const double eps = tau * u.max_abs();
  CHECK(measure(extract_support(u, tau)) >= total - sublevel_band(u, eps, 2.0).measure);
}

TEST_CASE("finite perimeter diagnostic") {
  std::vector<double> fits;
  for (std::size_t n : {80, 160, 320}) {
    const auto r = finite_perimeter_diagnostic(cone(n), log_spaced(0.01, 0.25, 12));
    CHECK(r.rows.size() == 12);
    fits.push_back(r.c_fit);
    CHECK(r.sup_delta_perimeter > 0.0);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      CHECK(r.rows[i].band_measure >= r.rows[i - 1].band_measure);
      CHECK(r.rows[i].running_c_fit >= r.rows[i - 1].running_c_fit);
    }
  }
  // the kink rim inflates small-eps ratios by O(h); the limit is 2 pi (1 + 1)
  for (std::size_t i = 1; i < fits.size(); ++i) {
    CHECK(fits[i] < fits[i - 1]);
    CHECK(fits[i] - 4 * M_PI < 0.75 * (fits[i - 1] - 4 * M_PI));
  }
  for (double c : fits) CHECK(c > 4 * M_PI * 0.99);
  CHECK(fits[2] == doctest::Approx(4 * M_PI).epsilon(0.15));
  const auto z = finite_perimeter_diagnostic(ScalarField(unit(8)), log_spaced(0.01, 0.1, 4));
  CHECK(z.c_fit == 0.0);
  for (const auto& row : z.rows) CHECK(row.band_measure + row.perimeter == 0.0);
  CHECK_THROWS(finite_perimeter_diagnostic(cone(40), {}));
  CHECK_THROWS(finite_perimeter_diagnostic(cone(40), {0.0, 0.1}));
}

TEST_CASE("log spacing and sign changes") {
  const auto v = log_spaced(0.01, 1.0, 3);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(0.01));
  CHECK(v[1] == doctest::Approx(0.1));
  CHECK(v[2] == doctest::Approx(1.0));
  CHECK(sign_change_triangles(cone(40)) == 0);
  CHECK(sign_change_triangles(wavy(40)) > 0);
}

TEST_CASE("geometry csv") {
  std::ostringstream os;
  write_geometry_csv(os, finite_perimeter_diagnostic(cone(40), log_spaced(0.05, 0.2, 3)));
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "eps,band_measure,band_p_dirichlet,perimeter,running_c_fit");
  int lines = 0;
  for (std::string l; std::getline(is, l);) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("perimeter signature on a solver output") {
  const auto g = make_grid_cells({0, 0}, {1, 4}, 32);
  const auto s = solve_auxiliary(dirichlet_energy(2, constant_field(g, 16), constant_field(g, 0.02)), g);
  const auto r = finite_perimeter_diagnostic(s.u, log_spaced(5 * g.h(), s.u.max_abs() / 4, 20));
  double lo = 1e300, hi = 0;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
  }
  CHECK(hi <= 3 * lo);
}
