#include "qs/state_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qs/energy.hpp"
#include "qs/nlcg.hpp"

namespace qs {

namespace {

std::vector<std::size_t> free_list(const GridSpec& g, const std::vector<std::uint8_t>& flags) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (flags[k] && !g.on_boundary(k)) out.push_back(k);
  return out;
}

}  // namespace

std::pair<ScalarField, SolveReport> minimize_on_nodes(const IntegrandSpec& f, const GridSpec& g,
                                                      const std::vector<std::uint8_t>& free_flags,
                                                      const StateSolveOptions& opt) {
  auto free = free_list(g, free_flags);
  auto cells = cells_touching(g, free);

  ScalarField start(g);
  bool warm = false;
  if (opt.init) {
    if (!(opt.init->grid == g)) throw std::invalid_argument("warm start lives on another grid");
    for (auto k : free) start.values[k] = opt.init->values[k];
    warm = true;
  } else if (opt.start == StateSolveOptions::Start::automatic && f->p() != 2.0) {
    if (auto q = f->quadratic_surrogate()) {
      StateSolveOptions sub = opt;
      sub.record_trace = false;
      start = minimize_on_nodes(q, g, free_flags, sub).first;
    }
  }

  std::vector<double> deltas;
  if (f->p() == 2.0 || opt.deltas.empty()) deltas = {0.0};
  else if (warm) deltas = {opt.deltas.back()};
  else deltas = opt.deltas;

  CellEnergy energy(f, start, free, cells);
  auto x = energy.gather();
  SolveReport rep;
  const double last = deltas.back();
  for (double delta : deltas) {
    energy.set_integrand(delta > 0.0 ? f->smoothed(delta) : f);
    const double stage_tol = (delta > 0.0 && last > 0.0) ? opt.tol * std::max(1.0, delta / last) : opt.tol;
    const bool newton = opt.method != StateSolveOptions::Method::nlcg;
    NlcgResult r;
    if (newton) {
      NewtonOptions no;
      no.tol = stage_tol;
      no.step_tol = delta == last ? opt.step_tol : std::sqrt(opt.step_tol);
      no.max_iter = opt.newton_max_iter;
      no.lower_bound = -1.0 / opt.tol;
      no.record_trace = opt.record_trace;
      r = minimize_newton(energy, x, no);
    } else {
      NlcgOptions no;
      no.tol = stage_tol;
      no.max_iter = opt.max_iter;
      no.restart_every = opt.restart_every;
      no.lower_bound = -1.0 / opt.tol;
      no.record_trace = opt.record_trace;
      r = minimize_nlcg(energy, x, no);
    }
    rep.iterations += r.iterations;
    rep.final_gradient_norm = r.grad_norm;
    rep.converged = r.converged;
    rep.regularization_delta = delta;
    rep.trace = r.trace;
  }
  energy.scatter(x);
  ScalarField u = energy.field();
  u.boundary_zero = true;

  // report the exact (unsmoothed) state energy
  double e = 0.0;
  const auto ci = cell_integrals(*f, u);
  const auto zm = cell_zero_masses(*f, g);
  for (auto c : cells) e += ci[c] - zm[c];
  rep.energy = e;
  return {std::move(u), rep};
}

std::pair<ScalarField, SolveReport> minimize_on_support(const IntegrandSpec& f, const DomainMask& m,
                                                        const StateSolveOptions& opt) {
  return minimize_on_nodes(f, m.grid, m.interior_nodes(), opt);
}

double state_energy(const Integrand& f, const ScalarField& u, const DomainMask& m) {
  const auto ci = cell_integrals(f, u);
  const auto zm = cell_zero_masses(f, u.grid);
  double e = 0.0;
  for (std::size_t c = 0; c < ci.size(); ++c)
    if (m[c]) e += ci[c] - zm[c];
  return e;
}

double zero_level_mass(const Integrand& f, const DomainMask& m) {
  const auto zm = cell_zero_masses(f, m.grid);
  double s = 0.0;
  for (std::size_t c = 0; c < zm.size(); ++c)
    if (m[c]) s += zm[c];
  return s;
}

double shape_value(const IntegrandSpec& f, const DomainMask& m, const StateSolveOptions& opt) {
  return minimize_on_support(f, m, opt).second.energy + zero_level_mass(*f, m);
}

std::pair<ScalarField, SolveReport> torsion(const DomainMask& m, double p, const StateSolveOptions& opt) {
  if (m.empty()) throw std::invalid_argument("torsion: empty mask");
  const auto f = dirichlet_energy(p, constant_field(m.grid, 1.0), constant_field(m.grid, 0.0));
  return minimize_on_support(f, m, opt);
}

double kkt_residual(const ScalarField& u, const IntegrandSpec& f, const DomainMask& m) {
  const auto flags = m.interior_nodes();
  auto free = free_list(m.grid, flags);
  auto cells = cells_touching(m.grid, free);
  CellEnergy energy(f, u, free, cells);
  auto x = energy.gather();
  std::vector<double> g(x.size());
  energy.value_grad(x, g);
  return max_abs(g);
}

namespace {

/// Discrete Rayleigh quotient sum_T |T| |grad u|^p / sum_k A_k |u_k|^p over the
/// interior nodes of D.
class RayleighQuotient final : public Objective {
 public:
  RayleighQuotient(const GridSpec& g, double p) : g_(g), p_(p), u_(g.node_count(), 0.0), du_(g.node_count()) {
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      if (g.on_boundary(k)) continue;
      free_.push_back(k);
      area_.push_back(g.node_area(k));
    }
  }

  const std::vector<std::size_t>& free() const { return free_; }

  double mass(std::span<const double> x) const {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += area_[i] * std::pow(std::abs(x[i]), p_);
    return m;
  }

  double value(std::span<const double> x) override {
    scatter(x);
    return stiffness<false>() / mass(x);
  }

  double value_grad(std::span<const double> x, std::span<double> grad) override {
    scatter(x);
    std::fill(du_.begin(), du_.end(), 0.0);
    const double e = stiffness<true>();
    const double m = mass(x);
    const double r = e / m;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = std::abs(x[i]);
      const double dm = a > 0.0 ? area_[i] * p_ * std::pow(a, p_ - 2.0) * x[i] : 0.0;
      grad[i] = (du_[free_[i]] - r * dm) / m;
    }
    return r;
  }

  /// Gradient scale used to make the stopping tolerance relative.
  double reference_scale(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s = std::max(s, area_[i] * p_ * std::pow(std::abs(x[i]), p_ - 1.0));
    return s / mass(x);
  }

 private:
  void scatter(std::span<const double> x) {
    for (std::size_t i = 0; i < free_.size(); ++i) u_[free_[i]] = x[i];
  }

  template <bool WithGrad>
  double stiffness() {
    const double h = g_.h();
    const double area = 0.5 * g_.cell_area();
    double total = 0.0;
    for (std::size_t t = 0; t < g_.triangle_count(); ++t) {
      const auto n = g_.triangle_nodes(t);
      const Vec2 z = triangle_gradient(t, u_[n[0]], u_[n[1]], u_[n[2]], h);
      const double z2 = z[0] * z[0] + z[1] * z[1];
      if (z2 == 0.0) continue;
      const double zp2 = p_ == 2.0 ? 1.0 : std::pow(z2, 0.5 * (p_ - 2.0));
      total += area * zp2 * z2;
      if constexpr (WithGrad) {
        const double zx = area * p_ * zp2 * z[0] / h;
        const double zy = area * p_ * zp2 * z[1] / h;
        if (t % 2 == 0) {
          du_[n[0]] -= zx + zy;
          du_[n[1]] += zx;
          du_[n[2]] += zy;
        } else {
          du_[n[1]] += zx + zy;
          du_[n[2]] -= zx;
          du_[n[0]] -= zy;
        }
      }
    }
    return total;
  }

  GridSpec g_;
  double p_;
  std::vector<std::size_t> free_;
  std::vector<double> area_;
  std::vector<double> u_, du_;
};

}  // namespace

EigenResult eigen_estimate(const GridSpec& g, double p, double tol, std::size_t max_iter) {
  if (!(p > 1.0)) throw ConfigurationError("exponent must exceed 1");
  RayleighQuotient rq(g, p);
  const auto o = g.origin();
  const double x1 = o.x + g.width(), y1 = o.y + g.height();
  std::vector<double> x;
  x.reserve(rq.free().size());
  for (auto k : rq.free()) {
    const auto pt = g.node_point(k);
    x.push_back((pt.x - o.x) * (x1 - pt.x) * (pt.y - o.y) * (y1 - pt.y));
  }
  auto normalize = [&](std::span<double> v) {
    const double c = std::pow(rq.mass(v), 1.0 / p);
    for (auto& a : v) a /= c;
    return c;
  };
  normalize(x);

  NlcgOptions no;
  no.max_iter = max_iter;
  no.restart_every = 0;
  no.record_trace = true;
  no.rescale = normalize;
  no.tol = tol * rq.value(x) * rq.reference_scale(x);
  const auto r = minimize_nlcg(rq, x, no);

  EigenResult out;
  out.value = rq.value(x);
  out.iterations = r.iterations;
  out.trace = r.trace;
  out.eigenfunction = ScalarField(g);
  for (std::size_t i = 0; i < x.size(); ++i) out.eigenfunction.values[rq.free()[i]] = x[i];
  if (!r.converged) {
    std::ostringstream os;
    os << "eigen_estimate did not converge after " << r.iterations << " iterations (quotient "
       << format_real(out.value) << ", gradient " << format_real(r.grad_norm) << " > " << format_real(no.tol) << ")";
    throw EigenNonConvergence(os.str(), out.value);
  }
  return out;
}

}  // namespace qs
