#pragma once

#include <cstdint>
#include <vector>

#include "qs/integrand.hpp"
#include "qs/mesh.hpp"
#include "qs/state_solver.hpp"

namespace qs {

struct AuxParams {
  /// Indicator smoothing widths, relative to max|u| of the full-domain state.
  std::vector<double> sigmas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  /// Support threshold relative to max|u|.
  double tau = 1e-7;
  /// Refinement rounds R.
  std::size_t rounds = 50;
  /// Iteration cap per smoothing stage.
  std::size_t stage_max_iter = 10;
  /// Relative decrease of the exact energy a flip must achieve.
  double tol_flip = 1e-10;
  /// Chebyshev radius of the local trial solve around a flipped node.
  std::size_t patch_radius = 3;
  /// Drop connected support components whose energy contribution is positive.
  bool prune = true;
  StateSolveOptions inner{};

  void validate() const;
};

struct AuxStats {
  std::vector<std::size_t> stage_iterations;  // one entry per sigma
  std::vector<std::uint8_t> stage_converged;
  double energy_after_extraction = 0.0;
  std::size_t rounds = 0;
  std::size_t grown = 0;
  std::size_t shrunk = 0;
  std::size_t trials = 0;
  std::size_t pruned_components = 0;
  bool cycled = false;
  /// Exact auxiliary energy after extraction, after every accepted flip and
  /// after every closing re-solve.
  std::vector<double> energy_trace;
};

struct AuxSolution {
  ScalarField u;
  DomainMask support;
  /// `energy` holds the final auxiliary energy J.
  SolveReport report;
  AuxStats stats;
};

/// J(u) = sum over cells of the cell integral of f, counted iff the cell is
/// active: some nodal |u| above tau * max|u| (no cell when u = 0).
double auxiliary_energy(const ScalarField& u, const Integrand& f, double tau = 1e-7);

struct SmoothedEnergy {
  double value = 0.0;
  ScalarField gradient;  // zero at boundary nodes of D
};

/// integral of f - f(x,0,0) over D plus sum over cells of W_c phi_sigma(m_c), with
/// W_c the cell's zero-level mass, m_c the mean of the four squared nodal
/// values and phi_sigma(m) = m / (m + sigma^2).
SmoothedEnergy smoothed_energy(const ScalarField& u, const IntegrandSpec& f, double sigma);

/// Cells with some nodal |u| > tau * max|u|; empty when u = 0.
DomainMask extract_support(const ScalarField& u, double tau);

/// Minimizes J over fields on the grid: full-domain state solve, indicator
/// continuation, support extraction, node-flip refinement.
AuxSolution solve_auxiliary(const IntegrandSpec& f, const GridSpec& g, const AuxParams& params = {});

struct CounterexampleSource {
  ScalarField source;  // nodal density g, zero on the boundary of D
  double l1_norm = 0.0;
  ScalarField torsion;
  ScalarField state;  // v = w^{p'}
  SolveReport torsion_report;
};

/// w = torsion(target), v = w^{p'}, g = discrete p-Laplacian of v divided by
/// the lumped node area. v is then the exact discrete minimizer of
/// (1/p)|grad u|^p - g u over the whole box.
CounterexampleSource build_counterexample_source(const DomainMask& target, double p,
                                                 const StateSolveOptions& opt = {});

struct RecoveryReport {
  DomainMask target;
  DomainMask recovered;
  double symmetric_difference = 0.0;
  double allowance = 0.0;  // boundary cell count of the target times h^2
  double energy_target = 0.0;     // state energy of the solve restricted to the target
  double energy_recovered = 0.0;  // auxiliary energy of the recovered state
  double source_l1 = 0.0;
  ScalarField source;    // constructed g
  ScalarField solution;  // auxiliary minimizer
  bool converged = false;
  bool success = false;
  AuxStats stats;
};

RecoveryReport verify_recovery(const DomainMask& target, double p, const AuxParams& params = {});

}  // namespace qs
