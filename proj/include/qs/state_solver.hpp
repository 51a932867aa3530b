#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qs/integrand.hpp"
#include "qs/mesh.hpp"

namespace qs {

struct SolveReport {
  /// State energy: integral over the active cells of f(x,u,grad u) - f(x,0,0).
  double energy = 0.0;
  std::size_t iterations = 0;
  double final_gradient_norm = 0.0;
  bool converged = false;
  double regularization_delta = 0.0;
  std::vector<double> trace;  // energy trace of the last continuation stage
};

struct StateSolveOptions {
  double tol = 1e-10;
  std::size_t max_iter = 20000;
  /// Smoothing widths for p != 2, largest first.
  std::vector<double> deltas{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  enum class Start { automatic, zero } start = Start::automatic;
  /// Warm start; when present only the last smoothing stage is run.
  std::optional<ScalarField> init;
  bool record_trace = false;
  std::size_t restart_every = 50;
  /// Damped Newton with sparse factorization, or nonlinear conjugate gradients.
  enum class Method { newton, nlcg } method = Method::newton;
  /// Newton stops once its step is below this fraction of max|u|.
  double step_tol = 1e-12;
  std::size_t newton_max_iter = 200;
};

/// Minimizes the discrete energy over fields vanishing at every node outside
/// the given free set (boundary nodes of D are never free). Cells touching a
/// free node are integrated.
std::pair<ScalarField, SolveReport> minimize_on_nodes(const IntegrandSpec& f, const GridSpec& g,
                                                      const std::vector<std::uint8_t>& free_flags,
                                                      const StateSolveOptions& opt);

/// F(Omega) state problem: free variables are the mask's interior nodes.
std::pair<ScalarField, SolveReport> minimize_on_support(const IntegrandSpec& f, const DomainMask& m,
                                                        const StateSolveOptions& opt = {});

/// State energy of u over the active cells of m (integral of f - f(x,0,0)).
double state_energy(const Integrand& f, const ScalarField& u, const DomainMask& m);

/// Integral of f(x,0,0) over the active cells of m.
double zero_level_mass(const Integrand& f, const DomainMask& m);

/// Shape functional F(m) = state energy of the minimizer + zero-level mass of m.
double shape_value(const IntegrandSpec& f, const DomainMask& m, const StateSolveOptions& opt = {});

/// Torsion function of the mask: minimizer of (1/p)|grad u|^p - u.
std::pair<ScalarField, SolveReport> torsion(const DomainMask& m, double p, const StateSolveOptions& opt = {});

/// Max |component| of the reduced energy gradient at the mask's free nodes.
double kkt_residual(const ScalarField& u, const IntegrandSpec& f, const DomainMask& m);

class EigenNonConvergence : public std::runtime_error {
 public:
  EigenNonConvergence(const std::string& what, double quotient)
      : std::runtime_error(what), quotient(quotient) {}
  double quotient;
};

struct EigenResult {
  double value = 0.0;  // Rayleigh quotient at the final iterate
  std::size_t iterations = 0;
  ScalarField eigenfunction;
  std::vector<double> trace;  // quotient per iteration
};

/// Upper bound on the first Dirichlet eigenvalue of the p-Laplacian on the
/// grid box: discrete Rayleigh quotient minimized by normalized descent from
/// the bump (x - x0)(x1 - x)(y - y0)(y1 - y). `tol` bounds the relative
/// gradient of the quotient.
EigenResult eigen_estimate(const GridSpec& g, double p, double tol = 1e-4, std::size_t max_iter = 50000);

}  // namespace qs
