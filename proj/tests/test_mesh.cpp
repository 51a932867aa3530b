#include <cmath>
#include <sstream>

#include "doctest.h"
#include "qs/mesh.hpp"
#include "qs/random.hpp"
#include "qs/shapes.hpp"

using namespace qs;

namespace {
GridSpec unit(std::size_t cells) { return make_grid_cells({0, 0}, {1, 1}, cells); }
}  // namespace

TEST_CASE("make_grid spacing and counts") {
  const auto g = make_grid({0, 0}, {1, 1}, 3, 3);
  CHECK(g.h() == 0.5);
  CHECK(g.cell_count() == 4);
  CHECK(make_grid({0, 0}, {1, 1}, 129, 129).h() == 1.0 / 128.0);
  CHECK_THROWS_AS(make_grid({0, 0}, {1, 2}, 3, 3), ConfigurationError);
  CHECK_THROWS_AS(make_grid({0, 0}, {1, 1}, 2, 2), ConfigurationError);
  CHECK_THROWS_AS(make_grid({0, 0}, {-1, 1}, 3, 3), ConfigurationError);
}

TEST_CASE("node coordinates and numbering") {
  const auto g = make_grid({-1, 2}, {2, 1}, 9, 5);
  CHECK(g.node_count() == 45);
  CHECK(g.cell_count() == 32);
  const auto k = g.node(3, 2);
  CHECK(g.node_i(k) == 3);
  CHECK(g.node_j(k) == 2);
  CHECK(g.node_point(k).x == -1 + 3 * 0.25);
  CHECK(g.node_point(k).y == 2 + 2 * 0.25);
  CHECK(g.on_boundary(g.node(0, 2)));
  CHECK_FALSE(g.on_boundary(k));
  const auto cells_grid = make_grid_cells({0, 0}, {1, 4}, 16);
  CHECK(cells_grid.nx() == 17);
  CHECK(cells_grid.ny() == 65);
}

TEST_CASE("node areas sum to the box area") {
  const auto g = unit(7);
  double s = 0.0;
  for (std::size_t k = 0; k < g.node_count(); ++k) s += g.node_area(k);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.node_area(g.node(3, 3)) == doctest::Approx(g.cell_area()));
  CHECK(g.node_cells(0).size() == 1);
  CHECK(g.node_cells(g.node(2, 2)).size() == 4);
}

TEST_CASE("gradient of affine fields is exact") {
  const auto g = unit(8);
  CHECK(gradient(sample_field(g, [](Point p) { return p.x; }, false)).grad[5] == Vec2{1.0, 0.0});
  for (const auto& z : gradient(ScalarField(g)).grad) CHECK(z == Vec2{0.0, 0.0});
  for (const auto& z : gradient(sample_field(g, [](Point p) { return p.x + 2 * p.y; }, false)).grad) {
    CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z[1] == doctest::Approx(2.0).epsilon(1e-12));
  }
  CounterRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3), c = rng.uniform(-1, 1);
    const auto u = sample_field(g, [&](Point p) { return a * p.x + b * p.y + c; }, false);
    for (const auto& z : gradient(u).grad) {
      CHECK(std::abs(z[0] - a) <= 1e-12);
      CHECK(std::abs(z[1] - b) <= 1e-12);
    }
  }
}

TEST_CASE("integrate_cellwise") {
  const auto g = unit(16);
  std::vector<double> ones(g.triangle_count(), 1.0);
  CHECK(integrate_cellwise(g, ones) == 1.0);
  std::vector<double> c(g.triangle_count(), 2.5);
  CHECK(integrate_cellwise(g, c) == doctest::Approx(2.5));
  const auto grad = gradient(sample_field(g, [](Point p) { return p.x; }, false));
  std::vector<double> sq;
  for (const auto& z : grad.grad) sq.push_back(z[0] * z[0] + z[1] * z[1]);
  CHECK(integrate_cellwise(g, sq) == doctest::Approx(1.0).epsilon(1e-14));
  const auto g2 = make_grid_cells({0, 0}, {3, 2}, 12);
  CHECK(integrate_cellwise(g2, std::vector<double>(g2.triangle_count(), 1.0)) == doctest::Approx(6.0));
}

TEST_CASE("measure") {
  const auto g = unit(10);
  CHECK(measure(full_mask(g)) == doctest::Approx(1.0));
  CHECK(measure(DomainMask(g)) == 0.0);
  CHECK(measure(rectangle_mask(g, {0, 0}, {0.5, 1})) == doctest::Approx(0.5));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto big = random_blob_mask(g, s);
    const auto small = big.intersection(random_blob_mask(g, s + 100));
    CHECK(small.subset_of(big));
    CHECK(measure(small) <= measure(big));
    CHECK(measure(big) == doctest::Approx(static_cast<double>(big.active_count()) * g.cell_area()));
    CHECK(measure(big) <= g.area());
    CHECK(measure(big.complement()) == doctest::Approx(g.area() - measure(big)));
  }
}

TEST_CASE("restrict_to") {
  const auto g = unit(8);
  const auto u = sample_field(g, [](Point p) { return 1.0 + p.x * p.y; });
  CHECK(restrict_to(u, full_mask(g)).values == u.values);
  for (double v : restrict_to(u, DomainMask(g)).values) CHECK(v == 0.0);
  const auto left = rectangle_mask(g, {0, 0}, {0.5, 1});
  const auto r = restrict_to(ScalarField(g, 1.0), left);
  const auto closure = left.node_closure();
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    if (g.node_point(k).x > 0.5 + 1e-12) CHECK(r[k] == 0.0);
    if (!closure[k]) CHECK(r[k] == 0.0);
  }
  CHECK(r[g.node(2, 3)] == 1.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto m = random_blob_mask(g, s);
    const auto once = restrict_to(u, m);
    CHECK(restrict_to(once, m).values == once.values);
  }
}

TEST_CASE("mask set operations") {
  const auto g = unit(12);
  const auto a = random_blob_mask(g, 1), b = random_blob_mask(g, 2);
  CHECK(a.unite(b).complement() == a.complement().intersection(b.complement()));
  CHECK(symmetric_difference(a, a) == 0.0);
  CHECK(symmetric_difference(a, b) ==
        doctest::Approx(measure(a.unite(b)) - measure(a.intersection(b))));
  CHECK(boundary_cell_count(full_mask(g)) == 4 * 12 - 4);
  const auto one = rectangle_mask(g, {0.25, 0.25}, {0.25 + g.h(), 0.25 + g.h()});
  REQUIRE(one.active_count() == 1);
  for (auto v : one.interior_nodes()) CHECK(v == 0);
}

TEST_CASE("dumps round-trip exactly") {
  const auto g = make_grid_cells({-1.25, 0.5}, {2.5, 1.25}, 10);
  const auto u = sample_field(g, [](Point p) { return std::sin(3 * p.x) * std::exp(p.y) / 3.0; });
  std::stringstream ss;
  write_field(ss, u);
  const auto back = read_field(ss);
  CHECK(back.grid == g);
  CHECK(back.values == u.values);
  CHECK(back.is_boundary_zero());
  const auto m = random_blob_mask(g, 4);
  std::stringstream ms;
  write_mask(ms, m);
  CHECK(read_mask(ms) == m);
  std::stringstream bad("field 3 3\n");
  CHECK_THROWS(read_field(bad));
}

TEST_CASE("interpolation reproduces affine fields") {
  const auto g = unit(6);
  const auto u = sample_field(g, [](Point p) { return 2 * p.x - p.y + 0.5; }, false);
  CHECK(u.interpolate({0.37, 0.81}) == doctest::Approx(2 * 0.37 - 0.81 + 0.5).epsilon(1e-13));
  CHECK(u.interpolate({1.0, 1.0}) == doctest::Approx(1.5));
  CHECK(format_real(0.1) == "0.10000000000000001");
}
