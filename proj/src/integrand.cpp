#include "qs/integrand.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qs/random.hpp"

namespace qs {

namespace {

double norm(Vec2 z) { return std::hypot(z[0], z[1]); }

double field_value(const ScalarField& f, Point x) {
  if (f.values.empty()) return 0.0;
  return f.interpolate(x);
}

bool leq(double lhs, double rhs) {
  return lhs <= rhs + 1e-12 * (1.0 + std::abs(lhs) + std::abs(rhs));
}

}  // namespace

LocalHessian Integrand::hessian(const Site& x, double s, Vec2 z) const {
  LocalHessian h;
  const double es = 1e-6 * std::max(1.0, std::abs(s));
  const double ds = (d_s(x, s + es, z) - d_s(x, s - es, z)) / (2.0 * es);
  const Vec2 dzs_p = d_z(x, s + es, z), dzs_m = d_z(x, s - es, z);
  h.ss = ds;
  for (int a = 0; a < 2; ++a) h.sz[a] = (dzs_p[a] - dzs_m[a]) / (2.0 * es);
  for (int b = 0; b < 2; ++b) {
    const double ez = 1e-6 * std::max(1.0, std::abs(z[b]));
    Vec2 zp = z, zm = z;
    zp[b] += ez;
    zm[b] -= ez;
    const Vec2 gp = d_z(x, s, zp), gm = d_z(x, s, zm);
    for (int a = 0; a < 2; ++a) h.zz[a][b] = (gp[a] - gm[a]) / (2.0 * ez);
  }
  // symmetrize
  const double off = 0.5 * (h.zz[0][1] + h.zz[1][0]);
  h.zz[0][1] = h.zz[1][0] = off;
  return h;
}

DirichletIntegrand::DirichletIntegrand(double p, ScalarField source, ScalarField lam, double delta)
    : p_(p),
      source_(std::move(source)),
      lam_(std::move(lam)),
      delta_(delta),
      delta_p_(delta > 0.0 ? std::pow(delta, p) : 0.0) {}

double DirichletIntegrand::eval(const Site& x, double s, Vec2 z) const {
  const double z2 = z[0] * z[0] + z[1] * z[1];
  double grad_term;
  if (p_ == 2.0) {
    grad_term = 0.5 * z2;
  } else if (delta_ > 0.0) {
    grad_term = (std::pow(z2 + delta_ * delta_, 0.5 * p_) - delta_p_) / p_;
  } else {
    grad_term = std::pow(z2, 0.5 * p_) / p_;
  }
  return grad_term - field_at(source_, x) * s + field_at(lam_, x);
}

double DirichletIntegrand::d_s(const Site& x, double, Vec2) const { return -field_at(source_, x); }

Vec2 DirichletIntegrand::d_z(const Site&, double, Vec2 z) const {
  if (p_ == 2.0) return z;
  const double z2 = z[0] * z[0] + z[1] * z[1] + delta_ * delta_;
  if (z2 == 0.0) return {0.0, 0.0};
  const double w = std::pow(z2, 0.5 * (p_ - 2.0));
  return {w * z[0], w * z[1]};
}

IntegrandValue DirichletIntegrand::evaluate(const Site& x, double s, Vec2 z) const {
  const double g = field_at(source_, x);
  const double lam = field_at(lam_, x);
  const double z2 = z[0] * z[0] + z[1] * z[1];
  if (p_ == 2.0) return {0.5 * z2 - g * s + lam, -g, z};
  const double r2 = z2 + delta_ * delta_;
  if (r2 == 0.0) return {-g * s + lam, -g, {0.0, 0.0}};
  const double w = std::pow(r2, 0.5 * (p_ - 2.0));
  return {(w * r2 - delta_p_) / p_ - g * s + lam, -g, {w * z[0], w * z[1]}};
}

LocalHessian DirichletIntegrand::hessian(const Site&, double, Vec2 z) const {
  LocalHessian h;
  if (p_ == 2.0) {
    h.zz = {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
    return h;
  }
  const double r2 = z[0] * z[0] + z[1] * z[1] + delta_ * delta_;
  if (r2 == 0.0) return h;
  const double w = std::pow(r2, 0.5 * (p_ - 2.0));
  const double v = (p_ - 2.0) * w / r2;
  h.zz = {Vec2{w + v * z[0] * z[0], v * z[0] * z[1]}, Vec2{v * z[0] * z[1], w + v * z[1] * z[1]}};
  return h;
}

IntegrandSpec DirichletIntegrand::smoothed(double delta) const {
  if (p_ == 2.0) return shared_from_this();
  return std::make_shared<DirichletIntegrand>(p_, source_, lam_, delta);
}

IntegrandSpec DirichletIntegrand::quadratic_surrogate() const {
  return std::make_shared<DirichletIntegrand>(2.0, source_, lam_, 0.0);
}

std::string DirichletIntegrand::describe() const {
  std::ostringstream os;
  os << "dirichlet(p=" << format_real(p_) << ", delta=" << format_real(delta_) << ")";
  return os.str();
}

ScalarField constant_field(const GridSpec& g, double v) { return ScalarField(g, v, false); }

IntegrandSpec dirichlet_energy(double p, const ScalarField& source, const ScalarField& lam) {
  if (!(p > 1.0)) throw ConfigurationError("exponent must exceed 1");
  if (!(source.grid == lam.grid)) throw ConfigurationError("source and multiplier grids differ");
  for (double v : lam.values)
    if (v < 0.0)
      throw ConfigurationError("multiplier lam must be nonnegative (f(x,0,0) >= 0 is required)");
  return std::make_shared<DirichletIntegrand>(p, source, lam);
}

double sobolev_exponent(double p, int d) {
  const double dd = static_cast<double>(d);
  if (p >= dd) return std::numeric_limits<double>::infinity();
  return dd * p / (dd - p);
}

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::convexity: return "convexity";
    case Condition::lower_growth: return "lower_growth";
    case Condition::zero_level_nonnegative: return "zero_level_nonnegative";
    case Condition::strict_lower_growth: return "strict_lower_growth";
    case Condition::state_lipschitz: return "state_lipschitz";
    case Condition::two_sided_growth: return "two_sided_growth";
  }
  return "unknown";
}

Condition parse_condition(const std::string& name) {
  for (auto c : {Condition::convexity, Condition::lower_growth, Condition::zero_level_nonnegative,
                 Condition::strict_lower_growth, Condition::state_lipschitz,
                 Condition::two_sided_growth})
    if (condition_name(c) == name) return c;
  throw ConfigurationError("unknown condition '" + name + "'");
}

CheckResult check_condition(const Integrand& f, const GrowthCertificate& cert, Condition which,
                            const GridSpec& grid, std::uint64_t seed, const SamplingBox& box) {
  CounterRng rng(seed, static_cast<std::uint64_t>(which) + 101);
  const double p = f.p();
  const int d = 2;
  double pstar = sobolev_exponent(p, d);
  if (std::isinf(pstar)) pstar = std::isnan(cert.sobolev_power) ? p : cert.sobolev_power;

  CheckResult result;
  auto draw_z = [&]() -> Vec2 {
    const double r = box.z_max * std::sqrt(rng.uniform());
    const double th = 2.0 * M_PI * rng.uniform();
    return {r * std::cos(th), r * std::sin(th)};
  };

  if (which == Condition::zero_level_nonnegative) {
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      const Site x{grid.node_point(k), static_cast<std::ptrdiff_t>(k)};
      const double v = f.zero_level(x);
      ++result.samples;
      if (v < 0.0) {
        result.pass = false;
        result.counterexample = Violation{x.x, 0.0, {0.0, 0.0}, 0.0, 0.0, v};
        break;
      }
    }
    return result;
  }

  for (std::size_t n = 0; n < box.samples; ++n) {
    const Point x{grid.origin().x + rng.uniform() * grid.width(),
                  grid.origin().y + rng.uniform() * grid.height()};
    const Site site{x, -1};
    const double select = rng.uniform();
    double s = rng.uniform(-box.s_max, box.s_max);
    Vec2 z = draw_z();
    if (select < 0.10) s = 0.0;
    else if (select < 0.15) z = {0.0, 0.0};
    const double zp = std::pow(norm(z), p);
    Violation v{x, s, z, 0.0, 0.0, 0.0};

    switch (which) {
      case Condition::convexity: {
        const Vec2 z2 = draw_z();
        const Vec2 mid{0.5 * (z[0] + z2[0]), 0.5 * (z[1] + z2[1])};
        v.lhs = f.eval(site, s, mid);
        v.rhs = 0.5 * (f.eval(site, s, z) + f.eval(site, s, z2));
        break;
      }
      case Condition::lower_growth:
        v.lhs = cert.c * (zp - cert.alpha * std::pow(std::abs(s), p) - field_value(cert.a, x));
        v.rhs = f.eval(site, s, z);
        break;
      case Condition::strict_lower_growth:
        v.lhs = cert.c * (zp - cert.alpha * std::pow(std::abs(s), p) + 1.0);
        v.rhs = f.eval(site, s, z);
        break;
      case Condition::state_lipschitz: {
        const double t = rng.uniform() < 0.1 ? 0.0 : rng.uniform(-box.s_max, box.s_max);
        v.t = t;
        v.lhs = std::abs(f.eval(site, s, z) - f.eval(site, t, z));
        v.rhs = cert.K * std::abs(s - t) *
                (field_value(cert.a, x) + std::pow(std::abs(s), pstar) + std::pow(std::abs(t), pstar) + zp);
        break;
      }
      case Condition::two_sided_growth: {
        const double hv = f.eval(site, s, z) - (s == 0.0 ? f.zero_level(site) : 0.0);
        const double bs = field_value(cert.b, x) * std::pow(std::abs(s), cert.gamma);
        const double g = field_value(cert.offset, x);
        const double lower = cert.c * (zp - bs - g);
        const double upper = cert.C * (zp + bs + g);
        if (!leq(lower, hv)) {
          v.lhs = lower;
          v.rhs = hv;
        } else {
          v.lhs = hv;
          v.rhs = upper;
        }
        break;
      }
      case Condition::zero_level_nonnegative: break;
    }
    ++result.samples;
    if (!leq(v.lhs, v.rhs)) {
      result.pass = false;
      result.counterexample = v;
      break;
    }
  }
  return result;
}

bool gigicond_exponents_ok(double p, int d, double gamma, double sigma, double q) {
  const double pstar = sobolev_exponent(p, d);
  const bool gamma_ok = p <= gamma && gamma < pstar;
  const bool sigma_ok = sigma > static_cast<double>(d) / p;
  const double q_min = std::isinf(pstar) ? 1.0 : pstar / (pstar - gamma);
  const bool q_ok = gamma < pstar && q > q_min;
  return gamma_ok && sigma_ok && q_ok;
}

TheoremApplicability applicable_theorems(const Integrand& f, const GrowthCertificate& cert,
                                         double lambda1_estimate, const GridSpec& grid,
                                         std::uint64_t seed, const SamplingBox& box) {
  TheoremApplicability out;
  auto& why = out.reasons;
  auto run = [&](Condition c) {
    const auto r = check_condition(f, cert, c, grid, seed, box);
    if (!r.pass && r.counterexample) {
      const auto& v = *r.counterexample;
      std::ostringstream os;
      os << condition_name(c) << " violated at x=(" << format_real(v.x.x) << ", " << format_real(v.x.y)
         << "), s=" << format_real(v.s) << ", z=(" << format_real(v.z[0]) << ", " << format_real(v.z[1])
         << "): " << format_real(v.lhs) << " > " << format_real(v.rhs);
      why.push_back(os.str());
    } else {
      why.push_back(condition_name(c) + " holds on " + std::to_string(r.samples) + " samples");
    }
    return r.pass;
  };
  const bool alpha_ok = cert.alpha < lambda1_estimate;
  if (!alpha_ok && (cert.claims_lower_growth || cert.claims_strict_lower_growth))
    why.push_back("alpha = " + format_real(cert.alpha) + " is not below the eigenvalue estimate " +
                  format_real(lambda1_estimate));

  const bool convex = run(Condition::convexity);
  const bool zero_ok = run(Condition::zero_level_nonnegative);
  bool lower = false;
  if (cert.claims_lower_growth) lower = run(Condition::lower_growth) && alpha_ok;
  bool strict = false;
  if (cert.claims_strict_lower_growth) strict = run(Condition::strict_lower_growth) && alpha_ok;
  if (!cert.claims_lower_growth && !cert.claims_strict_lower_growth)
    why.push_back("no lower growth bound claimed");

  out.existence = convex && zero_ok && (lower || strict);

  bool two_sided = false;
  if (cert.claims_two_sided_growth) {
    const bool exps = gigicond_exponents_ok(f.p(), 2, cert.gamma, cert.sigma, cert.q);
    if (!exps) why.push_back("two-sided growth exponents (gamma, sigma, q) out of range");
    two_sided = run(Condition::two_sided_growth) && exps;
  } else {
    why.push_back("no two-sided growth bound claimed");
  }
  out.openness = out.existence && two_sided;

  bool lipschitz = false;
  if (cert.claims_state_lipschitz) lipschitz = run(Condition::state_lipschitz);
  else why.push_back("no state Lipschitz bound claimed");
  out.finite_perimeter = out.existence && strict && lipschitz;
  return out;
}

DerivativeCheck check_derivatives(const Integrand& f, const GridSpec& grid, std::uint64_t seed,
                                  std::size_t samples, double s_max, double z_max, double rel_tol) {
  CounterRng rng(seed, 7);
  DerivativeCheck out;
  for (std::size_t n = 0; n < samples; ++n) {
    const Site x{{grid.origin().x + rng.uniform() * grid.width(),
                  grid.origin().y + rng.uniform() * grid.height()},
                 -1};
    const double s = rng.uniform(-s_max, s_max);
    // keep |z| away from 0 where |z|^p is not smooth for p < 2
    const double r = z_max * (0.1 + 0.9 * rng.uniform());
    const double th = 2.0 * M_PI * rng.uniform();
    const Vec2 z{r * std::cos(th), r * std::sin(th)};
    const double scale = std::max({1.0, std::abs(s), r});
    const double eps = 1e-5 * scale;

    const double fs = (f.eval(x, s + eps, z) - f.eval(x, s - eps, z)) / (2.0 * eps);
    const double fzx = (f.eval(x, s, {z[0] + eps, z[1]}) - f.eval(x, s, {z[0] - eps, z[1]})) / (2.0 * eps);
    const double fzy = (f.eval(x, s, {z[0], z[1] + eps}) - f.eval(x, s, {z[0], z[1] - eps})) / (2.0 * eps);
    const double as = f.d_s(x, s, z);
    const Vec2 az = f.d_z(x, s, z);
    for (auto [a, b] : {std::pair{as, fs}, std::pair{az[0], fzx}, std::pair{az[1], fzy}}) {
      const double err = std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
      out.worst_relative_error = std::max(out.worst_relative_error, err);
    }
  }
  out.pass = out.worst_relative_error <= rel_tol;
  return out;
}

}  // namespace qs
