#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace qs {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(std::span<const double> x) = 0;
  /// Writes the gradient into g and returns the value.
  virtual double value_grad(std::span<const double> x, std::span<double> g) = 0;
};

struct SparseEntry {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Objective that can also assemble its Hessian as coordinate entries
/// (duplicates are summed).
class HessianObjective : public Objective {
 public:
  virtual void hessian(std::span<const double> x, std::vector<SparseEntry>& out) = 0;
};

class UnboundedBelow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NlcgOptions {
  double tol = 1e-10;  // on max |gradient component|
  std::size_t max_iter = 20000;
  std::size_t restart_every = 50;
  /// Throw UnboundedBelow once the value drops below this.
  double lower_bound = -std::numeric_limits<double>::infinity();
  bool record_trace = false;
  /// Optional rescaling applied after each step: returns c with x <- x / c and is
  /// only valid for scale-invariant objectives (gradient scales by c).
  std::function<double(std::span<double>)> rescale;
};

struct NlcgResult {
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // value after each accepted step (starting value first)
};

/// Polak-Ribiere(+) nonlinear conjugate gradient with an Armijo backtracking
/// line search refined by quadratic interpolation. Accepted steps strictly
/// decrease the objective.
NlcgResult minimize_nlcg(Objective& obj, std::vector<double>& x, const NlcgOptions& opt);

struct NewtonOptions {
  double tol = 1e-10;       // on max |gradient component|
  double step_tol = 1e-12;  // on max |step| relative to max |x|
  std::size_t max_iter = 200;
  double lower_bound = -std::numeric_limits<double>::infinity();
  bool record_trace = false;
};

/// Damped Newton iteration with a sparse direct factorization per step and
/// backtracking on the value. Converged once both the gradient and the last
/// step are below tolerance; falls back to steepest descent when the Newton
/// direction is not a descent direction.
NlcgResult minimize_newton(HessianObjective& obj, std::vector<double>& x, const NewtonOptions& opt);

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = a < 0 ? (-a > m ? -a : m) : (a > m ? a : m);
  return m;
}

}  // namespace qs
