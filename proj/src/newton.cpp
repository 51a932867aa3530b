#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <string>

#include "qs/nlcg.hpp"

namespace qs {

NlcgResult minimize_newton(HessianObjective& obj, std::vector<double>& x, const NewtonOptions& opt) {
  const std::size_t n = x.size();
  NlcgResult res;
  std::vector<double> g(n), trial(n), g_trial(n);
  double fx = obj.value_grad(x, g);
  if (opt.record_trace) res.trace.push_back(fx);
  if (n == 0) {
    res.value = fx;
    res.converged = true;
    return res;
  }

  std::vector<SparseEntry> entries;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analysed = false;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n)), d;
  double last_step = std::numeric_limits<double>::infinity();

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    res.grad_norm = max_abs(g);
    const double xs = std::max(max_abs(x), 1e-300);
    if (res.grad_norm <= opt.tol && last_step <= opt.step_tol * xs) break;

    obj.hessian(x, entries);
    trips.clear();
    trips.reserve(entries.size());
    for (const auto& e : entries)
      trips.emplace_back(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col), e.value);
    H.setFromTriplets(trips.begin(), trips.end());
    if (!analysed) {
      ldlt.analyzePattern(H);
      analysed = true;
    }
    ldlt.factorize(H);
    for (std::size_t i = 0; i < n; ++i) rhs[static_cast<Eigen::Index>(i)] = -g[i];
    bool newton = ldlt.info() == Eigen::Success;
    if (newton) {
      d = ldlt.solve(rhs);
      newton = ldlt.info() == Eigen::Success && d.allFinite();
    }
    double slope = 0.0;
    if (newton) {
      for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[static_cast<Eigen::Index>(i)];
      newton = slope < 0.0;
    }
    double alpha = 1.0;
    if (!newton) {
      d = rhs;
      slope = -d.squaredNorm();
      alpha = 1.0 / std::max(1e-300, d.cwiseAbs().maxCoeff());
      if (slope == 0.0) break;
    }

    // backtracking; near the minimum value differences are pure roundoff and
    // the full Newton step is judged by the gradient instead
    bool accepted = false;
    bool have_grad = false;
    double f_new = fx;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + alpha * d[static_cast<Eigen::Index>(i)];
      f_new = obj.value(trial);
      if (!std::isfinite(f_new)) {
        alpha *= 0.5;
        continue;
      }
      if (f_new <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      if (newton && alpha == 1.0 && std::abs(f_new - fx) <= 1e-10 * std::abs(fx)) {
        obj.value_grad(trial, g_trial);
        if (max_abs(g_trial) < res.grad_norm) {
          accepted = have_grad = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = alpha * d[static_cast<Eigen::Index>(i)];
      step = std::max(step, std::abs(dx));
      x[i] += dx;
    }
    last_step = step;
    if (have_grad) {
      fx = f_new;
      g.swap(g_trial);
    } else {
      fx = obj.value_grad(x, g);
    }
    if (fx < opt.lower_bound)
      throw UnboundedBelow("energy decreased past " + std::to_string(opt.lower_bound) +
                           "; the integrand does not look bounded below");
    if (opt.record_trace) res.trace.push_back(fx);
  }
  res.value = fx;
  res.grad_norm = max_abs(g);
  res.converged = res.grad_norm <= opt.tol;
  return res;
}

}  // namespace qs
