#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qs/integrand.hpp"
#include "qs/mesh.hpp"
#include "qs/nlcg.hpp"

namespace qs {

/// Discrete energy of a nodal field over a list of cells,
///
///   E(u) = sum_c sum_{T in c} (|T|/3) sum_{v in T} [f(x_v, u_v, grad u|_T) - f(x_v, 0, 0)]
///        + sum_c W_c * phi_sigma(mean_{v in c} u_v^2)        (optional penalty),
///
/// with phi_sigma(m) = m / (m + sigma^2) and W_c the cell's zero-level mass.
/// Works in reduced coordinates: only `free_nodes` move, every other node
/// keeps its value from the base field.
class CellEnergy final : public HessianObjective {
 public:
  CellEnergy(IntegrandSpec f, const ScalarField& base, std::vector<std::size_t> free_nodes,
             std::vector<std::size_t> cells);

  /// Enables the smoothed-indicator penalty with width sigma (0 disables).
  void set_penalty(double sigma) { sigma_ = sigma; }
  void set_integrand(IntegrandSpec f) { f_ = std::move(f); }

  double value(std::span<const double> x) override;
  double value_grad(std::span<const double> x, std::span<double> g) override;
  /// Hessian of the integrand part; the indicator penalty is not included.
  void hessian(std::span<const double> x, std::vector<SparseEntry>& out) override;

  std::vector<double> gather() const;  // current free values from the work field
  void scatter(std::span<const double> x);
  const ScalarField& field() const { return u_; }
  const std::vector<std::size_t>& free_nodes() const { return free_; }
  const std::vector<std::size_t>& cells() const { return cells_; }

  /// Zero-level mass of a cell: sum over its triangles of (|T|/3) sum_v f(x_v,0,0).
  static double cell_zero_mass(const Integrand& f, const GridSpec& g, std::size_t cell);

 private:
  template <bool WithGrad>
  double assemble(std::span<double> grad_full);

  IntegrandSpec f_;
  ScalarField u_;
  std::vector<std::size_t> free_;
  std::vector<std::size_t> cells_;
  std::vector<double> zero_level_;  // per node
  std::vector<double> cell_mass_;   // per listed cell
  std::vector<double> grad_full_;
  std::vector<std::ptrdiff_t> slot_;  // reduced index per node, -1 when fixed
  double sigma_ = 0.0;
};

/// Integral of f over one cell with the same vertex rule.
double cell_integral(const Integrand& f, const ScalarField& u, std::size_t c);

/// Per-cell integral sum_{T in c} (|T|/3) sum_v f(x_v, u_v, grad u|_T).
std::vector<double> cell_integrals(const Integrand& f, const ScalarField& u);

/// Per-cell zero-level mass (see CellEnergy::cell_zero_mass).
std::vector<double> cell_zero_masses(const Integrand& f, const GridSpec& g);

/// Cells touching any of the given nodes, sorted.
std::vector<std::size_t> cells_touching(const GridSpec& g, std::span<const std::size_t> nodes);

}  // namespace qs
