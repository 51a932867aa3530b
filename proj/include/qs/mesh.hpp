#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qs {

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Vec2 = std::array<double, 2>;

/// Uniform square-cell grid on the box D = [origin, origin + extent].
///
/// Nodes are numbered row-major, k = j*nx + i. Cell (i, j) spans nodes
/// (i, j)..(i+1, j+1) and is split along the (i+1, j)-(i, j+1) diagonal into
/// a lower-left and an upper-right triangle, so every nodal field has a
/// piecewise-constant gradient.
class GridSpec {
 public:
  GridSpec() = default;

  Point origin() const { return origin_; }
  double width() const { return h_ * static_cast<double>(nx_ - 1); }
  double height() const { return h_ * static_cast<double>(ny_ - 1); }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double h() const { return h_; }

  std::size_t node_count() const { return nx_ * ny_; }
  std::size_t cell_count() const { return (nx_ - 1) * (ny_ - 1); }
  std::size_t triangle_count() const { return 2 * cell_count(); }
  double area() const { return width() * height(); }
  double cell_area() const { return h_ * h_; }

  std::size_t node(std::size_t i, std::size_t j) const { return j * nx_ + i; }
  std::size_t cell(std::size_t i, std::size_t j) const { return j * (nx_ - 1) + i; }
  std::size_t node_i(std::size_t k) const { return k % nx_; }
  std::size_t node_j(std::size_t k) const { return k / nx_; }
  std::size_t cell_i(std::size_t c) const { return c % (nx_ - 1); }
  std::size_t cell_j(std::size_t c) const { return c / (nx_ - 1); }

  Point node_point(std::size_t k) const {
    return {origin_.x + static_cast<double>(node_i(k)) * h_,
            origin_.y + static_cast<double>(node_j(k)) * h_};
  }
  Point cell_center(std::size_t c) const {
    return {origin_.x + (static_cast<double>(cell_i(c)) + 0.5) * h_,
            origin_.y + (static_cast<double>(cell_j(c)) + 0.5) * h_};
  }
  bool on_boundary(std::size_t k) const {
    const auto i = node_i(k);
    const auto j = node_j(k);
    return i == 0 || j == 0 || i + 1 == nx_ || j + 1 == ny_;
  }

  /// Corner nodes of a cell in the order n00, n10, n01, n11.
  std::array<std::size_t, 4> cell_nodes(std::size_t c) const {
    const auto k = node(cell_i(c), cell_j(c));
    return {k, k + 1, k + nx_, k + nx_ + 1};
  }

  /// Triangle t = 2*cell + {0: lower-left (n00, n10, n01), 1: upper-right (n10, n11, n01)}.
  std::array<std::size_t, 3> triangle_nodes(std::size_t t) const {
    const auto n = cell_nodes(t / 2);
    if (t % 2 == 0) return {n[0], n[1], n[2]};
    return {n[1], n[3], n[2]};
  }

  /// Cells touching node k (up to four; missing ones at the boundary are skipped).
  std::vector<std::size_t> node_cells(std::size_t k) const;

  /// Lumped node area: sum over incident triangles of |T|/3.
  double node_area(std::size_t k) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  friend GridSpec make_grid(Point origin, Vec2 extent, std::size_t nx, std::size_t ny);
  Point origin_{};
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  double h_ = 0.0;
};

inline bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }

GridSpec make_grid(Point origin, Vec2 extent, std::size_t nx, std::size_t ny);

/// Grid with `cells` square cells along x; the y count follows from the extent.
GridSpec make_grid_cells(Point origin, Vec2 extent, std::size_t cells);

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  bool boundary_zero = true;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0, bool zero_on_boundary = true);

  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }

  /// Value of the piecewise-linear interpolant at p (clamped to D).
  double interpolate(Point p) const;
  double max_abs() const;
  bool is_boundary_zero() const;
};

/// Nodal field from a function of position; boundary nodes are zeroed when
/// `zero_on_boundary` is set.
template <class F>
ScalarField sample_field(const GridSpec& g, F&& fn, bool zero_on_boundary = true) {
  ScalarField u(g, 0.0, zero_on_boundary);
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    if (zero_on_boundary && g.on_boundary(k)) continue;
    u.values[k] = fn(g.node_point(k));
  }
  return u;
}

struct DomainMask {
  GridSpec grid;
  std::vector<std::uint8_t> active;

  DomainMask() = default;
  explicit DomainMask(const GridSpec& g, bool fill = false);

  bool operator[](std::size_t c) const { return active[c] != 0; }
  std::size_t active_count() const;
  bool empty() const { return active_count() == 0; }

  DomainMask complement() const;
  DomainMask intersection(const DomainMask& other) const;
  DomainMask unite(const DomainMask& other) const;
  bool subset_of(const DomainMask& other) const;

  /// Nodes touching at least one active cell.
  std::vector<std::uint8_t> node_closure() const;
  /// Nodes not on the boundary of D whose four incident cells are all active.
  std::vector<std::uint8_t> interior_nodes() const;

  friend bool operator==(const DomainMask&, const DomainMask&) = default;
};

/// Per-triangle constant gradients, index t = 2*cell + {0, 1}.
struct CellGradientField {
  GridSpec grid;
  std::vector<Vec2> grad;
};

/// Gradient of the linear interpolant on one triangle from its nodal values
/// in GridSpec::triangle_nodes order.
inline Vec2 triangle_gradient(std::size_t t, double a, double b, double c, double h) {
  if (t % 2 == 0) return {(b - a) / h, (c - a) / h};  // (n00, n10, n01)
  return {(b - c) / h, (b - a) / h};                  // (n10, n11, n01)
}

CellGradientField gradient(const ScalarField& u);

/// One-point rule per triangle, weight h^2/2.
double integrate_cellwise(const GridSpec& g, std::span<const double> per_triangle);

double measure(const DomainMask& m);

/// Zero every node whose incident cells are all inactive.
ScalarField restrict_to(const ScalarField& u, const DomainMask& m);

/// Measure of the symmetric difference of two masks on the same grid.
double symmetric_difference(const DomainMask& a, const DomainMask& b);

/// Active cells with at least one edge-neighbour that is inactive or outside D.
std::size_t boundary_cell_count(const DomainMask& m);

// Text dumps: header (kind, nx, ny, origin, h) then row-major data, one grid row
// per line, bottom row first. Reals use 17 significant digits.
void write_field(std::ostream& os, const ScalarField& u);
ScalarField read_field(std::istream& is);
void write_mask(std::ostream& os, const DomainMask& m);
DomainMask read_mask(std::istream& is);
void save_field(const std::string& path, const ScalarField& u);
ScalarField load_field(const std::string& path);
void save_mask(const std::string& path, const DomainMask& m);
DomainMask load_mask(const std::string& path);

std::string format_real(double v);

}  // namespace qs
