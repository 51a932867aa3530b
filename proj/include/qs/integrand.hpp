#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qs/mesh.hpp"

namespace qs {

/// Evaluation site: a point of D, plus the node index when the point is a node
/// (lets field-backed integrands skip interpolation).
struct Site {
  Point x;
  std::ptrdiff_t node = -1;
};

struct IntegrandValue {
  double f = 0.0;
  double fs = 0.0;
  Vec2 fz{0.0, 0.0};
};

/// Second derivatives of f in (s, z).
struct LocalHessian {
  double ss = 0.0;
  Vec2 sz{0.0, 0.0};
  std::array<Vec2, 2> zz{};
};

class Integrand;
using IntegrandSpec = std::shared_ptr<const Integrand>;

/// Running cost f(x, s, z) with s the state value and z the gradient slot.
class Integrand : public std::enable_shared_from_this<Integrand> {
 public:
  virtual ~Integrand() = default;

  virtual double p() const = 0;
  virtual double eval(const Site& x, double s, Vec2 z) const = 0;
  virtual double d_s(const Site& x, double s, Vec2 z) const = 0;
  virtual Vec2 d_z(const Site& x, double s, Vec2 z) const = 0;

  virtual IntegrandValue evaluate(const Site& x, double s, Vec2 z) const {
    return {eval(x, s, z), d_s(x, s, z), d_z(x, s, z)};
  }

  /// Defaults to centred differences of d_s and d_z.
  virtual LocalHessian hessian(const Site& x, double s, Vec2 z) const;

  /// f(x, 0, 0).
  virtual double zero_level(const Site& x) const { return eval(x, 0.0, {0.0, 0.0}); }

  /// Copy with |z|^p replaced by (|z|^2 + delta^2)^{p/2} - delta^p. Integrands
  /// without a degenerate gradient term return themselves.
  virtual IntegrandSpec smoothed(double /*delta*/) const { return shared_from_this(); }

  /// Same problem with exponent 2, used as a warm start; null when unavailable.
  virtual IntegrandSpec quadratic_surrogate() const { return nullptr; }

  /// Smoothing parameter currently applied (0 for the exact integrand).
  virtual double smoothing() const { return 0.0; }

  virtual std::string describe() const = 0;
};

/// f(x, s, z) = (1/p)|z|^p - g(x) s + lam(x), optionally delta-smoothed.
class DirichletIntegrand final : public Integrand {
 public:
  DirichletIntegrand(double p, ScalarField source, ScalarField lam, double delta = 0.0);

  double p() const override { return p_; }
  double eval(const Site& x, double s, Vec2 z) const override;
  double d_s(const Site& x, double s, Vec2 z) const override;
  Vec2 d_z(const Site& x, double s, Vec2 z) const override;
  IntegrandValue evaluate(const Site& x, double s, Vec2 z) const override;
  LocalHessian hessian(const Site& x, double s, Vec2 z) const override;
  double zero_level(const Site& x) const override { return field_at(lam_, x); }
  IntegrandSpec smoothed(double delta) const override;
  IntegrandSpec quadratic_surrogate() const override;
  double smoothing() const override { return delta_; }
  std::string describe() const override;

  const ScalarField& source() const { return source_; }
  const ScalarField& lam() const { return lam_; }

 private:
  static double field_at(const ScalarField& f, const Site& x) {
    return x.node >= 0 ? f.values[static_cast<std::size_t>(x.node)] : f.interpolate(x.x);
  }
  double p_;
  ScalarField source_;
  ScalarField lam_;
  double delta_;
  double delta_p_;
};

/// Nodal field holding the constant v everywhere, boundary included.
ScalarField constant_field(const GridSpec& g, double v);

/// Dirichlet energy integrand; rejects p <= 1 and negative lam.
IntegrandSpec dirichlet_energy(double p, const ScalarField& source, const ScalarField& lam);

/// dp/(d-p) for p < d, +infinity otherwise.
double sobolev_exponent(double p, int d);

enum class Condition {
  convexity,               // convex in z
  lower_growth,            // c(|z|^p - alpha|s|^p - a(x)) <= f
  zero_level_nonnegative,  // f(x,0,0) >= 0
  strict_lower_growth,     // c(|z|^p - alpha|s|^p + 1) <= f
  state_lipschitz,         // |f(x,s,z)-f(x,t,z)| <= K|s-t|(a + |s|^p* + |t|^p* + |z|^p)
  two_sided_growth,        // c(|z|^p - b|s|^gamma - g) <= h <= C(|z|^p + b|s|^gamma + g)
};

std::string condition_name(Condition c);
Condition parse_condition(const std::string& name);

/// User-declared constants for the growth hypotheses; the library only
/// falsifies them by sampling, it never infers them.
struct GrowthCertificate {
  double c = 1.0;
  double alpha = 0.0;
  double C = 1.0;
  ScalarField a;       // a(x); an empty field reads as 0
  ScalarField b;       // b(x) of the two-sided bound; empty reads as 0
  ScalarField offset;  // g(x) of the two-sided bound; empty reads as 0
  double gamma = 2.0;
  double sigma = 2.0;
  double q = 2.0;
  double K = 0.0;
  /// Power replacing the Sobolev exponent when p >= d; NaN selects p.
  double sobolev_power = std::numeric_limits<double>::quiet_NaN();
  bool claims_lower_growth = false;
  bool claims_strict_lower_growth = false;
  bool claims_state_lipschitz = false;
  bool claims_two_sided_growth = false;
};

struct SamplingBox {
  double s_max = 100.0;
  double z_max = 100.0;
  std::size_t samples = 10000;
};

struct Violation {
  Point x;
  double s = 0.0;
  Vec2 z{0.0, 0.0};
  double t = 0.0;  // second state value (state_lipschitz only)
  double lhs = 0.0;
  double rhs = 0.0;
};

struct CheckResult {
  bool pass = true;
  std::size_t samples = 0;
  std::optional<Violation> counterexample;  // first violating sample
};

/// Seeded falsification of a claimed inequality over x in D, |s| <= S, |z| <= Z.
/// Ten percent of the samples pin s = 0 and another five percent pin z = 0.
CheckResult check_condition(const Integrand& f, const GrowthCertificate& cert, Condition which,
                            const GridSpec& grid, std::uint64_t seed, const SamplingBox& box = {});

/// Exponent constraints of the Hölder regularity theorem:
/// p <= gamma < p*, sigma > d/p, q > p*/(p* - gamma) (read as 1 when p* is infinite).
bool gigicond_exponents_ok(double p, int d, double gamma, double sigma, double q);

struct TheoremApplicability {
  bool existence = false;
  bool openness = false;
  bool finite_perimeter = false;
  std::vector<std::string> reasons;
};

/// Classifies which conclusions the declared certificate supports. Any
/// claimed alpha must stay below lambda1_estimate.
TheoremApplicability applicable_theorems(const Integrand& f, const GrowthCertificate& cert,
                                         double lambda1_estimate, const GridSpec& grid,
                                         std::uint64_t seed, const SamplingBox& box = {});

struct DerivativeCheck {
  bool pass = true;
  double worst_relative_error = 0.0;
};

/// Compares d_s, d_z with centred differences (step 1e-5 * scale).
DerivativeCheck check_derivatives(const Integrand& f, const GridSpec& grid, std::uint64_t seed,
                                  std::size_t samples = 1000, double s_max = 2.0,
                                  double z_max = 2.0, double rel_tol = 1e-6);

}  // namespace qs
