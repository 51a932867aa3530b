#include <cmath>
#include <limits>

#include "doctest.h"
#include "qs/expression.hpp"
#include "qs/integrand.hpp"
#include "qs/random.hpp"

using namespace qs;

namespace {

GridSpec unit() { return make_grid_cells({0, 0}, {1, 1}, 8); }

IntegrandSpec dirichlet(double p, double g, double lam) {
  const auto grid = unit();
  return dirichlet_energy(p, constant_field(grid, g), constant_field(grid, lam));
}

const Site kSite{{0.3, 0.6}, -1};

// Certificate under which every theorem applies to |z|^2/2 - 0.1 s + 0.1.
GrowthCertificate full_certificate(const GridSpec& g) {
  GrowthCertificate c;
  c.c = 0.05;
  c.alpha = 10.0;
  c.claims_strict_lower_growth = true;
  c.K = 0.1;
  c.a = constant_field(g, 1.0);
  c.claims_state_lipschitz = true;
  c.b = constant_field(g, 1.0);
  c.offset = constant_field(g, 1.0);
  c.claims_two_sided_growth = true;
  return c;
}

}  // namespace

TEST_CASE("dirichlet_energy values") {
  const auto f0 = dirichlet(2, 0, 0);
  CHECK(f0->eval(kSite, 0.7, {0.3, -0.4}) == doctest::Approx(0.125));
  CHECK(f0->zero_level(kSite) == 0.0);
  CHECK(dirichlet(2, 1, 0.1)->eval(kSite, 1.0, {1.0, 0.0}) == doctest::Approx(-0.4));
  CHECK(dirichlet(3, 1, 0)->eval(kSite, 0.0, {1.0, 1.0}) == doctest::Approx(std::pow(std::sqrt(2.0), 3) / 3));
  CHECK(dirichlet(3, 1, 0)->eval(kSite, 0.0, {1.0, 1.0}) == doctest::Approx(0.9428).epsilon(1e-4));
  const auto f = dirichlet(2.5, 2, 0.3);
  for (double x : {0.0, 0.25, 0.9}) {
    const Site s{{x, 1.0 - x}, -1};
    CHECK(f->zero_level(s) == f->eval(s, 0.0, {0.0, 0.0}));
  }
}

TEST_CASE("dirichlet_energy rejects bad data") {
  const auto g = unit();
  CHECK_THROWS(dirichlet_energy(1.0, constant_field(g, 1), constant_field(g, 0)));
  CHECK_THROWS(dirichlet_energy(0.5, constant_field(g, 1), constant_field(g, 0)));
  auto lam = constant_field(g, 0.1);
  lam[7] = -1e-3;
  CHECK_THROWS(dirichlet_energy(2.0, constant_field(g, 1), lam));
}

TEST_CASE("sobolev_exponent") {
  CHECK(sobolev_exponent(2, 3) == 6.0);
  CHECK(sobolev_exponent(2, 2) == std::numeric_limits<double>::infinity());
  CHECK(sobolev_exponent(3, 2) == std::numeric_limits<double>::infinity());
  CHECK(sobolev_exponent(2, 4) == 4.0);
}

TEST_CASE("derivatives match centred differences") {
  const auto g = unit();
  const auto src = sample_expression(g, Expression::parse("1 + sin(3*x)*y"));
  const auto lam = sample_expression(g, Expression::parse("0.2 + x^2"));
  for (double p : {1.5, 2.0, 3.0}) {
    const auto f = dirichlet_energy(p, src, lam);
    CHECK(check_derivatives(*f, g, 3, 1000).pass);
    CHECK(check_derivatives(*f->smoothed(1e-2), g, 4, 1000).pass);
  }
}

TEST_CASE("midpoint convexity in z") {
  const auto g = unit();
  CounterRng rng(9);
  for (double p : {1.5, 2.0, 4.0}) {
    const auto f = dirichlet(p, 1.0, 0.1);
    for (int n = 0; n < 2000; ++n) {
      const Site x{{rng.uniform(), rng.uniform()}, -1};
      const double s = rng.uniform(-5, 5);
      const Vec2 a{rng.uniform(-5, 5), rng.uniform(-5, 5)}, b{rng.uniform(-5, 5), rng.uniform(-5, 5)};
      const Vec2 m{(a[0] + b[0]) / 2, (a[1] + b[1]) / 2};
      CHECK(f->eval(x, s, m) <= (f->eval(x, s, a) + f->eval(x, s, b)) / 2 + 1e-12);
    }
    GrowthCertificate cert;
    CHECK(check_condition(*f, cert, Condition::convexity, g, 1).pass);
  }
}

TEST_CASE("lower growth with a(x) = 1") {
  const auto g = unit();
  // |z|^2/2 + 0.1 >= 0.5 (|z|^2 - 1) holds for every s, z when the source vanishes
  GrowthCertificate cert;
  cert.c = 0.5;
  cert.a = constant_field(g, 1.0);
  const auto f = dirichlet(2, 0.0, 0.1);
  const auto r = check_condition(*f, cert, Condition::lower_growth, g, 11);
  CHECK(r.pass);
  CHECK(r.samples == 10000);
  // extremes of the box: s = +-100, z = 0 and |z| = 100
  for (double s : {-100.0, 100.0})
    for (double z : {0.0, 100.0})
      CHECK(cert.c * (z * z - 1.0) <= f->eval(kSite, s, {z, 0.0}));
  // with g = 1 the bound fails once s > 0.6 at z = 0
  const auto fail = check_condition(*dirichlet(2, 1.0, 0.1), cert, Condition::lower_growth, g, 11);
  CHECK_FALSE(fail.pass);
  REQUIRE(fail.counterexample);
  CHECK(fail.counterexample->s > 0.6);
}

TEST_CASE("strict lower growth fails at the origin without a volume term") {
  const auto g = unit();
  GrowthCertificate cert;
  cert.c = 0.6;
  const auto r = check_condition(*dirichlet(2, 0, 0), cert, Condition::strict_lower_growth, g, 2);
  CHECK_FALSE(r.pass);
  REQUIRE(r.counterexample);
  CHECK(r.counterexample->lhs > r.counterexample->rhs);
  // alpha = 0: 0.6 (|z|^2 + 1) > |z|^2 / 2 everywhere, so the first sample already fails
  CHECK(r.samples == 1);
  cert.c = 0.05;
  cert.alpha = 10.0;
  CHECK(check_condition(*dirichlet(2, 0.1, 0.1), cert, Condition::strict_lower_growth, g, 2).pass);
}

TEST_CASE("state Lipschitz bound with K = sup |g|") {
  const auto g = unit();
  const auto src = sample_expression(g, Expression::parse("2*sin(5*x) - y"));
  double sup = 0.0;
  for (double v : src.values) sup = std::max(sup, std::abs(v));
  GrowthCertificate cert;
  cert.K = sup;
  cert.a = constant_field(g, 1.0);
  const auto f = dirichlet_energy(2.0, src, constant_field(g, 0.0));
  CHECK(check_condition(*f, cert, Condition::state_lipschitz, g, 5).pass);
  // without a(x) the bound degenerates near s = t = 0, z = 0
  cert.a = ScalarField();
  cert.K = 0.01 * sup;
  CHECK_FALSE(check_condition(*f, cert, Condition::state_lipschitz, g, 5).pass);
}

TEST_CASE("sampling is deterministic per seed") {
  const auto g = unit();
  GrowthCertificate cert;
  cert.c = 0.6;
  const auto f = dirichlet(2, 1, 0);
  const auto a = check_condition(*f, cert, Condition::lower_growth, g, 42);
  const auto b = check_condition(*f, cert, Condition::lower_growth, g, 42);
  REQUIRE(a.counterexample);
  REQUIRE(b.counterexample);
  CHECK(a.counterexample->s == b.counterexample->s);
  CHECK(a.counterexample->z == b.counterexample->z);
  CHECK(a.counterexample->x == b.counterexample->x);
  CHECK_THROWS(parse_condition("f2-prime"));
  CHECK(parse_condition(condition_name(Condition::two_sided_growth)) == Condition::two_sided_growth);
}

TEST_CASE("gigicond exponent table") {
  CHECK(gigicond_exponents_ok(2, 2, 2, 2, 2));
  CHECK_FALSE(gigicond_exponents_ok(2, 3, 2, 1, 10));
  CHECK(gigicond_exponents_ok(2, 3, 5, 2, 10));
  CHECK_FALSE(gigicond_exponents_ok(2, 3, 6, 2, 10));  // gamma = p*
  CHECK_FALSE(gigicond_exponents_ok(2, 3, 1.5, 2, 10));  // gamma < p
  CHECK_FALSE(gigicond_exponents_ok(2, 3, 5, 2, 6));  // q = p*/(p* - gamma)
}

TEST_CASE("gigicond monotone in sigma and q") {
  for (double p : {1.5, 2.0, 3.0})
    for (int d : {2, 3})
      for (double gamma : {1.5, 2.0, 3.0, 5.0})
        for (double sigma = 0.25; sigma < 4; sigma += 0.25)
          for (double q = 0.5; q < 12; q += 0.5) {
            if (!gigicond_exponents_ok(p, d, gamma, sigma, q)) continue;
            CHECK(gigicond_exponents_ok(p, d, gamma, sigma + 0.5, q));
            CHECK(gigicond_exponents_ok(p, d, gamma, sigma, q + 0.5));
          }
}

TEST_CASE("applicable_theorems") {
  const auto g = unit();
  const double lambda1 = 2 * M_PI * M_PI;
  const auto cert = full_certificate(g);
  const auto all = applicable_theorems(*dirichlet(2, 0.1, 0.1), cert, lambda1, g, 1);
  CHECK(all.existence);
  CHECK(all.openness);
  CHECK(all.finite_perimeter);

  const auto no_volume = applicable_theorems(*dirichlet(2, 0.1, 0.0), cert, lambda1, g, 1);
  CHECK_FALSE(no_volume.finite_perimeter);

  auto big_alpha = cert;
  big_alpha.alpha = lambda1;
  const auto r = applicable_theorems(*dirichlet(2, 0.1, 0.1), big_alpha, lambda1, g, 1);
  CHECK_FALSE(r.existence);
  CHECK_FALSE(r.reasons.empty());

  // implications over a family of certificates
  for (double lam : {0.0, 0.05, 0.1})
    for (double c : {0.01, 0.05, 0.6})
      for (int mask = 0; mask < 8; ++mask) {
        auto k = cert;
        k.c = c;
        k.claims_strict_lower_growth = mask & 1;
        k.claims_lower_growth = !(mask & 1);
        k.claims_state_lipschitz = mask & 2;
        k.claims_two_sided_growth = mask & 4;
        const auto t = applicable_theorems(*dirichlet(2, 0.1, lam), k, lambda1, g, 3, {100, 100, 2000});
        CHECK((!t.openness || t.existence));
        CHECK((!t.finite_perimeter || t.existence));
      }
}

TEST_CASE("expression grammar") {
  CHECK(Expression::parse("1 + 2*3")(0, 0) == 7.0);
  CHECK(Expression::parse("-x^2")(3, 0) == -9.0);
  CHECK(Expression::parse("2^3^2")(0, 0) == 512.0);
  CHECK(Expression::parse("abs(x - y) / 2")(1, 4) == 1.5);
  CHECK(Expression::parse("exp(0) + cos(0) - sin(0)")(0, 0) == 2.0);
  CHECK_THROWS(Expression::parse("2 +"));
  CHECK_THROWS(Expression::parse("tan(x)"));
  CHECK_THROWS(Expression::parse("(x"));
}
