#include "qs/nlcg.hpp"

#include <cmath>
#include <string>

namespace qs {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

NlcgResult minimize_nlcg(Objective& obj, std::vector<double>& x, const NlcgOptions& opt) {
  constexpr double c1 = 1e-4;
  const std::size_t n = x.size();
  NlcgResult res;
  if (n == 0) {
    res.value = obj.value(x);
    res.converged = true;
    if (opt.record_trace) res.trace.push_back(res.value);
    return res;
  }

  std::vector<double> g(n), g_new(n), d(n), trial(n);
  double fx = obj.value_grad(x, g);
  if (opt.record_trace) res.trace.push_back(fx);
  for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
  double alpha_prev = 0.0, dphi_prev = 0.0;
  double alpha_good = 0.0;  // last step that made resolvable progress
  std::size_t since_restart = 0;
  int stalls = 0;

  auto eval_at = [&](double a) {
    for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + a * d[i];
    return obj.value(trial);
  };

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    res.grad_norm = max_abs(g);
    if (res.grad_norm <= opt.tol) {
      res.converged = true;
      break;
    }
    double dphi0 = dot(g, d);
    if (!(dphi0 < 0.0)) {
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dphi0 = -dot(g, g);
      since_restart = 0;
    }

    double alpha;
    if (alpha_prev > 0.0) {
      alpha = alpha_prev * dphi_prev / dphi0;
    } else {
      const double dn = max_abs(d);
      alpha = dn > 0.0 ? 1.0 / dn : 1.0;
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = 1.0 / std::max(1e-300, max_abs(d));

    double f1 = eval_at(alpha);
    bool accepted = false;
    double f_acc = fx, a_acc = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      const double curv = (f1 - fx - alpha * dphi0) / (alpha * alpha);
      const bool armijo = std::isfinite(f1) && f1 <= fx + c1 * alpha * dphi0;
      if (armijo) {
        f_acc = f1;
        a_acc = alpha;
        if (curv > 0.0) {
          const double aq = -dphi0 / (2.0 * curv);
          if (aq > 0.0 && std::abs(aq - alpha) > 1e-3 * alpha) {
            const double fq = eval_at(aq);
            if (std::isfinite(fq) && fq < f_acc && fq <= fx + c1 * aq * dphi0) {
              f_acc = fq;
              a_acc = aq;
            }
          }
        } else {
          // negative curvature along d: try going further
          double a2 = 2.0 * alpha;
          for (int k = 0; k < 20; ++k) {
            const double f2 = eval_at(a2);
            if (!(std::isfinite(f2) && f2 < f_acc)) break;
            f_acc = f2;
            a_acc = a2;
            a2 *= 2.0;
          }
        }
        accepted = true;
        break;
      }
      double next = (std::isfinite(f1) && curv > 0.0) ? -dphi0 / (2.0 * curv) : 0.25 * alpha;
      next = std::min(std::max(next, 0.1 * alpha), 0.5 * alpha);
      alpha = next;
      f1 = eval_at(alpha);
    }

    if (accepted && fx - f_acc >= 1e-11 * (std::abs(fx) + 1e-300)) alpha_good = a_acc;
    // Near the minimum the value differences drown in roundoff; fall back to a
    // secant step on the directional derivative, which stays resolvable.
    const double roundoff = 1e-11 * (std::abs(fx) + 1e-300);
    const double slack = 1e-13 * std::abs(fx);
    if (!accepted || !(f_acc < fx) || fx - f_acc < roundoff) {
      const double a0 = alpha_good > 0.0 ? alpha_good : 1.0 / std::max(1e-300, max_abs(d));
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + a0 * d[i];
      const double ft = obj.value_grad(trial, g_new);
      const double dphi1 = dot(g_new, d);
      if (std::isfinite(ft) && dphi1 > dphi0) {
        const double as = a0 * (-dphi0) / (dphi1 - dphi0);
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + as * d[i];
        const double fs = obj.value_grad(trial, g_new);
        if (std::isfinite(fs) && fs <= fx + slack && std::abs(dot(g_new, d)) < std::abs(dphi0)) {
          a_acc = as;
          f_acc = fs;
          accepted = true;
          alpha_good = as;
        }
      }
    }

    if (!accepted || !(f_acc <= fx + slack)) {
      // no progress along d; retry once from steepest descent, then give up
      if (since_restart == 0 || ++stalls > 2) break;
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      since_restart = 0;
      alpha_prev = 0.0;
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) x[i] += a_acc * d[i];
    double scale = 1.0;
    if (opt.rescale) {
      scale = opt.rescale(x);
      if (scale != 1.0)
        for (std::size_t i = 0; i < n; ++i) d[i] /= scale;
    }
    const double f_new = obj.value_grad(x, g_new);
    if (f_new < opt.lower_bound)
      throw UnboundedBelow("energy decreased past " + std::to_string(opt.lower_bound) +
                           "; the integrand does not look bounded below");
    if (opt.record_trace) res.trace.push_back(f_new);
    if (scale != 1.0)
      for (std::size_t i = 0; i < n; ++i) g[i] *= scale;

    // progress too small to matter in double precision
    if (std::abs(fx - f_new) <= 1e-16 * std::abs(fx) && max_abs(g_new) >= res.grad_norm) ++stalls;
    else stalls = 0;

    const double gg = dot(g, g);
    double beta = 0.0;
    if (gg > 0.0) {
      double num = 0.0;
      for (std::size_t i = 0; i < n; ++i) num += g_new[i] * (g_new[i] - g[i]);
      beta = std::max(0.0, num / gg);
    }
    ++since_restart;
    if (opt.restart_every > 0 && since_restart >= opt.restart_every) {
      beta = 0.0;
      since_restart = 0;
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -g_new[i] + beta * d[i];
    alpha_prev = a_acc;
    dphi_prev = dphi0;
    g.swap(g_new);
    fx = f_new;
    if (stalls > 5) {
      ++res.iterations;
      break;
    }
  }
  res.value = fx;
  res.grad_norm = max_abs(g);
  res.converged = res.grad_norm <= opt.tol;
  return res;
}

}  // namespace qs
