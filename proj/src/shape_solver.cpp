#include "qs/shape_solver.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "qs/energy.hpp"
#include "qs/nlcg.hpp"

namespace qs {

void AuxParams::validate() const {
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw ConfigurationError("smoothing widths must be positive");
    if (i > 0 && !(sigmas[i] < sigmas[i - 1])) throw ConfigurationError("smoothing widths must decrease");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigurationError("tau must lie in (0, 1)");
  if (!(tol_flip > 0.0)) throw ConfigurationError("tol_flip must be positive");
  if (!(inner.tol > 0.0)) throw ConfigurationError("solver tolerance must be positive");
  if (inner.max_iter == 0 || stage_max_iter == 0) throw ConfigurationError("iteration caps must be positive");
}

namespace {

bool cell_active(const ScalarField& u, std::size_t c, double thr) {
  for (auto k : u.grid.cell_nodes(c))
    if (std::abs(u[k]) > thr) return true;
  return false;
}

double cell_j(const Integrand& f, const ScalarField& u, std::size_t c, double thr) {
  return cell_active(u, c, thr) ? cell_integral(f, u, c) : 0.0;
}

double threshold(const ScalarField& u, double tau) {
  const double m = u.max_abs();
  return m > 0.0 ? tau * m : 0.0;
}

std::vector<std::uint8_t> interior_flags(const GridSpec& g) {
  std::vector<std::uint8_t> f(g.node_count(), 0);
  for (std::size_t k = 0; k < g.node_count(); ++k) f[k] = !g.on_boundary(k);
  return f;
}

/// Nodes sharing a cell with k (3x3 block without k), clipped to the grid.
template <class Fn>
void for_neighbours(const GridSpec& g, std::size_t k, Fn&& fn) {
  const auto i = static_cast<std::ptrdiff_t>(g.node_i(k));
  const auto j = static_cast<std::ptrdiff_t>(g.node_j(k));
  const auto nx = static_cast<std::ptrdiff_t>(g.nx());
  const auto ny = static_cast<std::ptrdiff_t>(g.ny());
  for (std::ptrdiff_t dj = -1; dj <= 1; ++dj)
    for (std::ptrdiff_t di = -1; di <= 1; ++di) {
      if (di == 0 && dj == 0) continue;
      const auto a = i + di, b = j + dj;
      if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
      fn(g.node(static_cast<std::size_t>(a), static_cast<std::size_t>(b)));
    }
}

std::uint64_t flags_hash(const std::vector<std::uint8_t>& f) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : f) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

class Refiner {
 public:
  Refiner(IntegrandSpec f, const AuxParams& prm, ScalarField u, std::vector<std::uint8_t> free)
      : f_(std::move(f)), prm_(prm), u_(std::move(u)), free_(std::move(free)) {
    const auto& d = prm_.inner.deltas;
    trial_f_ = (f_->p() != 2.0 && !d.empty()) ? f_->smoothed(d.back()) : f_;
  }

  ScalarField& u() { return u_; }
  std::vector<std::uint8_t>& free() { return free_; }

  /// Full warm-started solve on the current free set.
  SolveReport resolve() {
    StateSolveOptions o = prm_.inner;
      o.init = u_;
    o.record_trace = false;
    auto [u, rep] = minimize_on_nodes(f_, u_.grid, free_, o);
    u_ = std::move(u);
    iterations_ += rep.iterations;
    return rep;
  }

  /// Zeroes free nodes whose value fell to the support threshold.
  void drop_vanished() {
    const double thr = threshold(u_, prm_.tau);
    for (std::size_t k = 0; k < free_.size(); ++k)
      if (free_[k] && std::abs(u_[k]) <= thr) {
        free_[k] = 0;
        u_[k] = 0.0;
      }
  }

  /// Removes connected pieces of the free set that raise J. Returns the count.
  std::size_t prune() {
    const auto& g = u_.grid;
    const double thr = threshold(u_, prm_.tau);
    std::vector<std::int64_t> comp(g.node_count(), -1);
    std::size_t removed = 0;
    std::vector<std::size_t> stack, members, cells;
    std::int64_t next = 0;
    for (std::size_t s = 0; s < g.node_count(); ++s) {
      if (!free_[s] || comp[s] >= 0) continue;
      members.clear();
      stack.assign(1, s);
      comp[s] = next;
      while (!stack.empty()) {
        const auto k = stack.back();
        stack.pop_back();
        members.push_back(k);
        for_neighbours(g, k, [&](std::size_t n) {
          if (free_[n] && comp[n] < 0) {
            comp[n] = next;
            stack.push_back(n);
          }
        });
      }
      ++next;
      std::sort(members.begin(), members.end());
      cells = cells_touching(g, members);
      double j = 0.0;
      for (auto c : cells) j += cell_j(*f_, u_, c, thr);
      if (j > 0.0) {
        for (auto k : members) {
          free_[k] = 0;
          u_[k] = 0.0;
        }
        ++removed;
      }
    }
    return removed;
  }

  /// One sweep over the candidates in row-major order. Returns accepted flips.
  std::size_t sweep(double j_tol, AuxStats& st, double& j_now) {
    const auto& g = u_.grid;
    const double thr = threshold(u_, prm_.tau);
    std::size_t accepted = 0;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      if (g.on_boundary(k)) continue;
      bool touches_free = false, touches_other = false;
      for_neighbours(g, k, [&](std::size_t n) {
        if (free_[n]) touches_free = true;
        else touches_other = true;
      });
      const bool grow = !free_[k];
      if (grow ? !touches_free : !touches_other) continue;
      ++st.trials;
      const double dj = trial(k, grow, thr, j_tol);
      if (dj < -j_tol) {
        ++accepted;
        ++(grow ? st.grown : st.shrunk);
        j_now += dj;
        st.energy_trace.push_back(j_now);
      }
    }
    return accepted;
  }

  std::size_t iterations() const { return iterations_; }

 private:
  /// Flips node k, relaxes a patch around it with the rest frozen and keeps the
  /// flip iff the exact J drops by more than j_tol. Returns the change in J.
  double trial(std::size_t k, bool grow, double thr, double j_tol) {
    const auto& g = u_.grid;
    const auto r = static_cast<std::ptrdiff_t>(prm_.patch_radius);
    const auto ki = static_cast<std::ptrdiff_t>(g.node_i(k));
    const auto kj = static_cast<std::ptrdiff_t>(g.node_j(k));
    free_[k] = grow ? 1 : 0;

    patch_.clear();
    for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(1, kj - r);
         b <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.ny()) - 2, kj + r); ++b)
      for (std::ptrdiff_t a = std::max<std::ptrdiff_t>(1, ki - r);
           a <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.nx()) - 2, ki + r); ++a) {
        const auto n = g.node(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        if (free_[n]) patch_.push_back(n);
      }
    touched_ = patch_;
    touched_.push_back(k);
    std::sort(touched_.begin(), touched_.end());
    const auto cells = cells_touching(g, touched_);

    double before = 0.0;
    for (auto c : cells) before += cell_j(*f_, u_, c, thr);
    saved_.clear();
    for (auto n : touched_) saved_.push_back(u_[n]);

    u_[k] = 0.0;
    CellEnergy e(trial_f_, u_, patch_, cells);
    auto x = e.gather();
    NlcgOptions no;
    no.tol = prm_.inner.tol;
    no.max_iter = prm_.inner.max_iter;
    no.restart_every = prm_.inner.restart_every;
    no.lower_bound = -1.0 / prm_.inner.tol;
    const auto res = minimize_nlcg(e, x, no);
    iterations_ += res.iterations;
    for (std::size_t i = 0; i < patch_.size(); ++i) u_[patch_[i]] = x[i];

    double after = 0.0;
    for (auto c : cells) after += cell_j(*f_, u_, c, thr);
    const double dj = after - before;
    if (dj < -j_tol) return dj;
    for (std::size_t i = 0; i < touched_.size(); ++i) u_[touched_[i]] = saved_[i];
    free_[k] = grow ? 0 : 1;
    return 0.0;
  }

  IntegrandSpec f_;
  IntegrandSpec trial_f_;
  const AuxParams& prm_;
  ScalarField u_;
  std::vector<std::uint8_t> free_;
  std::vector<std::size_t> patch_, touched_;
  std::vector<double> saved_;
  std::size_t iterations_ = 0;
};

}  // namespace

double auxiliary_energy(const ScalarField& u, const Integrand& f, double tau) {
  const double thr = threshold(u, tau);
  if (u.max_abs() == 0.0) return 0.0;
  double j = 0.0;
  for (std::size_t c = 0; c < u.grid.cell_count(); ++c) j += cell_j(f, u, c, thr);
  return j;
}

SmoothedEnergy smoothed_energy(const ScalarField& u, const IntegrandSpec& f, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("smoothed_energy: sigma must be positive");
  const auto& g = u.grid;
  std::vector<std::size_t> free, cells(g.cell_count());
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (!g.on_boundary(k)) free.push_back(k);
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = c;
  CellEnergy e(f, u, free, cells);
  e.set_penalty(sigma);
  auto x = e.gather();
  std::vector<double> gr(x.size());
  SmoothedEnergy out;
  out.value = e.value_grad(x, gr);
  out.gradient = ScalarField(g);
  for (std::size_t i = 0; i < free.size(); ++i) out.gradient[free[i]] = gr[i];
  return out;
}

DomainMask extract_support(const ScalarField& u, double tau) {
  DomainMask m(u.grid);
  if (u.max_abs() == 0.0) return m;
  const double thr = tau * u.max_abs();
  for (std::size_t c = 0; c < m.active.size(); ++c) m.active[c] = cell_active(u, c, thr);
  return m;
}

AuxSolution solve_auxiliary(const IntegrandSpec& f, const GridSpec& g, const AuxParams& prm) {
  prm.validate();
  AuxSolution out;
  auto& st = out.stats;

  StateSolveOptions o = prm.inner;
  o.start = StateSolveOptions::Start::zero;
  o.init.reset();
  o.record_trace = false;
  auto [u, rep] = minimize_on_nodes(f, g, interior_flags(g), o);
  std::size_t iterations = rep.iterations;
  const double scale = u.max_abs();
  if (scale == 0.0) {
    out.u = std::move(u);
    out.support = DomainMask(g);
    out.report = rep;
    out.report.energy = 0.0;
    return out;
  }

  // Stage A: indicator continuation
  const auto zm = cell_zero_masses(*f, g);
  const bool has_zero_level = std::any_of(zm.begin(), zm.end(), [](double z) { return z != 0.0; });
  if (has_zero_level) {
    const auto& d = prm.inner.deltas;
    const auto fs = (f->p() != 2.0 && !d.empty()) ? f->smoothed(d.back()) : f;
    std::vector<std::size_t> free, cells(g.cell_count());
    for (std::size_t k = 0; k < g.node_count(); ++k)
      if (!g.on_boundary(k)) free.push_back(k);
    for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = c;
    CellEnergy e(fs, u, free, cells);
    auto x = e.gather();
    for (double s : prm.sigmas) {
      e.set_penalty(s * scale);
      NewtonOptions no;
      no.tol = prm.inner.tol;
      no.step_tol = prm.inner.step_tol;
      no.max_iter = prm.stage_max_iter;
      no.lower_bound = -1.0 / prm.inner.tol;
      const auto r = minimize_newton(e, x, no);
      st.stage_iterations.push_back(r.iterations);
      st.stage_converged.push_back(r.converged);
      iterations += r.iterations;
    }
    e.scatter(x);
    u = e.field();
  }

  // Stage B: extraction
  const double thr = threshold(u, prm.tau);
  std::vector<std::uint8_t> free(g.node_count(), 0);
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (!g.on_boundary(k) && std::abs(u[k]) > thr) free[k] = 1;
    else u[k] = 0.0;

  Refiner ref(f, prm, std::move(u), std::move(free));
  SolveReport last = ref.resolve();
  ref.drop_vanished();
  if (prm.prune) st.pruned_components += ref.prune();
  double j = auxiliary_energy(ref.u(), *f, prm.tau);
  st.energy_after_extraction = j;
  st.energy_trace.push_back(j);

  // Stage C: node flips
  const double reference = std::abs(rep.energy) + std::abs(zero_level_mass(*f, DomainMask(g, true)));
  std::unordered_set<std::uint64_t> seen{flags_hash(ref.free())};
  bool settled = false;
  for (st.rounds = 0; st.rounds < prm.rounds;) {
    const double j_tol = prm.tol_flip * std::max(std::abs(j), reference);
    const auto flips = ref.sweep(j_tol, st, j);
    ++st.rounds;
    if (flips == 0) {
      settled = true;
      break;
    }
    last = ref.resolve();
    ref.drop_vanished();
    if (prm.prune) st.pruned_components += ref.prune();
    j = auxiliary_energy(ref.u(), *f, prm.tau);
    st.energy_trace.push_back(j);
    if (!seen.insert(flags_hash(ref.free())).second) {
      st.cycled = true;
      break;
    }
  }

  out.u = std::move(ref.u());
  out.u.boundary_zero = true;
  out.support = extract_support(out.u, prm.tau);
  out.report = last;
  out.report.energy = auxiliary_energy(out.u, *f, prm.tau);
  out.report.iterations = iterations + ref.iterations();
  out.report.converged = last.converged && rep.converged && settled && !st.cycled;
  return out;
}

CounterexampleSource build_counterexample_source(const DomainMask& target, double p,
                                                 const StateSolveOptions& opt) {
  if (!(p > 1.0)) throw ConfigurationError("exponent must exceed 1");
  if (target.empty()) throw std::invalid_argument("counterexample: empty target");
  const auto& g = target.grid;
  CounterexampleSource out;
  auto [w, rep] = torsion(target, p, opt);
  out.torsion_report = rep;

  const double pc = p / (p - 1.0);
  ScalarField v(g);
  for (std::size_t k = 0; k < g.node_count(); ++k) v[k] = w[k] > 0.0 ? std::pow(w[k], pc) : 0.0;

  std::vector<std::size_t> free, cells(g.cell_count());
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (!g.on_boundary(k)) free.push_back(k);
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = c;
  CellEnergy e(dirichlet_energy(p, constant_field(g, 0.0), constant_field(g, 0.0)), v, free, cells);
  auto x = e.gather();
  std::vector<double> grad(x.size());
  e.value_grad(x, grad);

  out.source = ScalarField(g);
  for (std::size_t i = 0; i < free.size(); ++i) {
    const double a = g.node_area(free[i]);
    out.source[free[i]] = grad[i] / a;
    out.l1_norm += std::abs(grad[i]);
  }
  out.torsion = std::move(w);
  out.state = std::move(v);
  return out;
}

RecoveryReport verify_recovery(const DomainMask& target, double p, const AuxParams& params) {
  const auto& g = target.grid;
  const auto cx = build_counterexample_source(target, p, params.inner);
  const auto spec = dirichlet_energy(p, cx.source, constant_field(g, 0.0));
  const auto sol = solve_auxiliary(spec, g, params);

  RecoveryReport r;
  r.target = target;
  r.recovered = sol.support;
  r.symmetric_difference = symmetric_difference(target, sol.support);
  r.allowance = static_cast<double>(boundary_cell_count(target)) * g.cell_area();
  r.energy_target = minimize_on_support(spec, target, params.inner).second.energy;
  r.energy_recovered = sol.report.energy;
  r.source_l1 = cx.l1_norm;
  r.source = cx.source;
  r.solution = sol.u;
  r.converged = sol.report.converged && cx.torsion_report.converged;
  r.success = r.symmetric_difference <= r.allowance;
  r.stats = sol.stats;
  return r;
}

}  // namespace qs
