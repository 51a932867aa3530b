#pragma once

// Reference computations that do not go through the library's solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qs/integrand.hpp"
#include "qs/mesh.hpp"

namespace oracle {

/// Value at the centre of the solution of -Lap u = 1 on the unit square with
/// zero boundary data, by the double sine series over odd m, n, summed until
/// a full shell of terms changes the total by less than tol.
inline double square_torsion_center(double tol = 1e-12) {
  const double pi4 = std::pow(M_PI, 4);
  double sum = 0.0;
  for (int shell = 1;; shell += 2) {
    double added = 0.0;
    for (int m = 1; m <= shell; m += 2) {
      for (int n = 1; n <= shell; n += 2) {
        if (m != shell && n != shell) continue;
        const double sm = ((m / 2) % 2 == 0) ? 1.0 : -1.0;  // sin(m pi / 2)
        const double sn = ((n / 2) % 2 == 0) ? 1.0 : -1.0;
        added += 16.0 / (pi4 * m * n * (m * m + n * n)) * sm * sn;
      }
    }
    sum += added;
    if (shell > 5 && std::abs(added) < tol) return sum;
  }
}

/// Radial torsion function of the disc of radius R in the plane:
/// ((p-1)/p) 2^{-1/(p-1)} (R^{p'} - r^{p'}).
inline double radial_torsion(double p, double R, double r) {
  const double pc = p / (p - 1.0);
  return (p - 1.0) / p * std::pow(2.0, -1.0 / (p - 1.0)) * std::max(0.0, std::pow(R, pc) - std::pow(r, pc));
}

/// Smallest eigenvalue of K x = lambda M x for the five-point stiffness and the
/// lumped mass h^2 on the interior nodes of an nx-by-ny node grid, by inverse
/// power iteration with a conjugate-gradient inner solve.
inline double five_point_min_eigenvalue(std::size_t nx, std::size_t ny, std::size_t iterations = 400) {
  const std::size_t mx = nx - 2, my = ny - 2, n = mx * my;
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t j = 0; j < my; ++j)
      for (std::size_t i = 0; i < mx; ++i) {
        const std::size_t k = j * mx + i;
        double v = 4.0 * x[k];
        if (i > 0) v -= x[k - 1];
        if (i + 1 < mx) v -= x[k + 1];
        if (j > 0) v -= x[k - mx];
        if (j + 1 < my) v -= x[k + mx];
        y[k] = v;  // stiffness without the h scaling: K = A, M = h^2 I
      }
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  std::vector<double> x(n, 1.0), y(n), r(n), d(n), q(n);
  double mu = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    // solve A y = x
    std::fill(y.begin(), y.end(), 0.0);
    r = x;
    d = r;
    double rr = dot(r, r);
    for (std::size_t k = 0; k < 4 * n && rr > 1e-28 * dot(x, x); ++k) {
      apply(d, q);
      const double a = rr / dot(d, q);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * d[i];
        r[i] -= a * q[i];
      }
      const double rr2 = dot(r, r);
      for (std::size_t i = 0; i < n; ++i) d[i] = r[i] + rr2 / rr * d[i];
      rr = rr2;
    }
    const double norm = std::sqrt(dot(y, y));
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    apply(x, q);
    mu = dot(x, q);  // Rayleigh quotient of A at unit x
  }
  return mu;  // divide by h^2 for the generalized eigenvalue
}

/// Discrete 1-D problem on (0, 1) with n cells: minimize over node intervals
/// [a, b] the value lam (b - a) h + E(a, b), with E the minimum of
/// sum (1/2) h ((u_{k+1} - u_k)/h)^2 - h sum u_k (lumped) over fields vanishing
/// outside (a, b). Returns the best length (0 for the empty set) and value.
struct IntervalOptimum {
  double length = 0.0;
  double value = 0.0;
};

inline double interval_energy(std::size_t cells, double h) {
  // -u'' = 1 with three-point stencil and lumped load is exact for the
  // quadratic x (L - x) / 2 at the nodes.
  const double L = static_cast<double>(cells) * h;
  double e = 0.0;
  std::vector<double> u(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    const double x = static_cast<double>(k) * h;
    u[k] = 0.5 * x * (L - x);
  }
  for (std::size_t k = 0; k < cells; ++k) e += 0.5 * h * std::pow((u[k + 1] - u[k]) / h, 2);
  for (std::size_t k = 1; k < cells; ++k) e -= h * u[k];
  return e;
}

inline IntervalOptimum interval_bruteforce(std::size_t n, double lam) {
  const double h = 1.0 / static_cast<double>(n);
  IntervalOptimum best;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b <= n; ++b) {
      const std::size_t cells = b - a;
      const double v = lam * static_cast<double>(cells) * h + interval_energy(cells, h);
      if (v < best.value) best = {static_cast<double>(cells) * h, v};
    }
  return best;
}

/// Auxiliary energy by the rewritten form: integral over D of f - f(x,0,0)
/// plus the zero-level mass of the cells where u is nonzero, each cell
/// integrated with the vertex rule of the library (weight |T|/3 per vertex).
inline double rewritten_auxiliary_energy(const qs::ScalarField& u, const qs::Integrand& f, double tau) {
  const auto& g = u.grid;
  const double thr = tau * u.max_abs();
  const double w = g.cell_area() / 6.0;
  double smooth = 0.0, mass = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    double cell_smooth = 0.0, cell_mass = 0.0;
    for (std::size_t t = 2 * c; t < 2 * c + 2; ++t) {
      const auto n = g.triangle_nodes(t);
      const auto z = qs::triangle_gradient(t, u[n[0]], u[n[1]], u[n[2]], g.h());
      for (auto k : n) {
        const qs::Site x{g.node_point(k), static_cast<std::ptrdiff_t>(k)};
        cell_smooth += w * (f.eval(x, u[k], z) - f.zero_level(x));
        cell_mass += w * f.zero_level(x);
      }
    }
    bool active = false;
    if (thr > 0.0)
      for (auto k : g.cell_nodes(c)) active = active || std::abs(u[k]) > thr;
    smooth += cell_smooth;
    if (active) mass += cell_mass;
  }
  return smooth + mass;
}

}  // namespace oracle
