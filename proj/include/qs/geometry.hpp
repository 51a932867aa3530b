#pragma once

#include <iosfwd>
#include <vector>

#include "qs/mesh.hpp"

namespace qs {

// Level-set quantities of the piecewise-linear interpolant of the nodal |u|.

/// Nodewise (u - eps)^+ - (u + eps)^-: shrinks u toward zero by eps.
ScalarField truncate(const ScalarField& u, double eps);

struct Band {
  double measure = 0.0;      // |{0 < |u| <= eps}|
  double p_dirichlet = 0.0;  // integral of |grad u|^p over that set
};

/// Exact on each triangle (the band of a linear function is a polygon).
Band sublevel_band(const ScalarField& u, double eps, double p = 2.0);

/// Length of the polyline {|u| = t} by marching triangles; a vertex counts as
/// inside when its value exceeds t.
double level_set_perimeter(const ScalarField& u, double t);

/// Trapezoid rule for the integral over (0, eps] of the level-set perimeter on
/// n_samples uniform steps; the t = 0 sample is replaced by t = eps/n_samples.
double coarea_profile(const ScalarField& u, double eps, std::size_t n_samples);

/// Triangles whose vertex values change sign (where the interpolant of |u|
/// differs from |interpolant of u|).
std::size_t sign_change_triangles(const ScalarField& u);

struct GeometryRow {
  double eps = 0.0;
  double band_measure = 0.0;
  double band_p_dirichlet = 0.0;
  double perimeter = 0.0;
  double ratio = 0.0;      // (band_measure + band_p_dirichlet) / eps
  double running_c_fit = 0.0;
};

struct GeometryReport {
  double p = 2.0;
  std::vector<GeometryRow> rows;  // increasing eps
  double c_fit = 0.0;             // max ratio
  std::vector<double> delta;      // perimeter minimizer in each dyadic band
  std::vector<double> delta_perimeter;
  double sup_delta_perimeter = 0.0;
  std::size_t sign_change_triangles = 0;
};

/// Log-spaced levels from a to b inclusive.
std::vector<double> log_spaced(double a, double b, std::size_t n);

/// Tabulates bands and perimeters over eps_range (sorted on entry). Throws on
/// an empty range or a non-positive level.
GeometryReport finite_perimeter_diagnostic(const ScalarField& u, std::vector<double> eps_range, double p = 2.0);

/// CSV: eps, band_measure, band_p_dirichlet, perimeter, running_c_fit.
void write_geometry_csv(std::ostream& os, const GeometryReport& r);

}  // namespace qs
