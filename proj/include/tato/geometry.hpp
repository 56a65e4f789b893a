#pragma once

// Acquisition geometry: a truncated-disk region of interest
//   Omega = { x : |x| < R, x_1 < x_right }
// observed from detectors on the open circular arc
//   gamma = { z : |z| = R_gamma, z_1 < z_right },  R_gamma > R.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tato/error.hpp"

namespace tato {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 polar(double r, double angle) { return {r * std::cos(angle), r * std::sin(angle)}; }

struct AcquisitionGeometry {
  double roi_radius = 1.0;   // R
  double arc_radius = 1.3;   // R_gamma
  double x_right = 1.0;      // ROI truncation abscissa
  double z_right = 1.0;      // arc truncation abscissa
  int n_detectors = 500;
  int n_collocation = 1000;

  friend bool operator==(const AcquisitionGeometry&, const AcquisitionGeometry&) = default;

  void validate() const {
    if (!(roi_radius > 0) || !std::isfinite(roi_radius))
      throw GeometryError("ROI radius must be positive");
    if (!(arc_radius > roi_radius) || !std::isfinite(arc_radius))
      throw GeometryError("arc radius must exceed the ROI radius");
    if (!(z_right > -arc_radius && z_right <= arc_radius))
      throw GeometryError("z_right must lie in (-R_gamma, R_gamma]: degenerate arc");
    if (!(x_right > -roi_radius && x_right <= roi_radius))
      throw GeometryError("x_right must lie in (-R, R]: degenerate ROI");
    if (n_detectors < 2) throw GeometryError("need at least two detectors");
    if (n_collocation < 2) throw GeometryError("need at least two collocation points");
  }

  /// Detectors cover the whole circle |z| = R_gamma.
  bool closed_arc() const { return z_right >= arc_radius; }

  /// The ROI is the whole disk |x| < R.
  bool full_disk_roi() const { return x_right >= roi_radius; }

  /// Geometry #1: unit-disk ROI, arc truncated at z_right = 1.
  static AcquisitionGeometry geometry1(int n_detectors = 500) {
    return {1.0, 1.3, 1.0, 1.0, n_detectors, 2 * n_detectors};
  }
  /// Geometry #2: half-disk ROI x_1 < 0 and a half-circle arc.
  static AcquisitionGeometry geometry2(int n_detectors = 500) {
    return {1.0, 1.3, 0.0, 0.0, n_detectors, 2 * n_detectors};
  }
  /// Closed circle of detectors around the unit disk.
  static AcquisitionGeometry full_circle(int n_detectors = 500) {
    return {1.0, 1.3, 1.0, 1.3, n_detectors, 2 * n_detectors};
  }
};

/// A quadrature node on a curve: position, unit outward normal, arclength weight.
struct BoundaryPoint {
  Vec2 position;
  Vec2 normal;
  double weight = 0.0;
};

/// Half-angle of the missing part of the arc, measured from the positive x axis.
inline double arc_start_angle(const AcquisitionGeometry& g) {
  return g.closed_arc() ? 0.0 : std::acos(g.z_right / g.arc_radius);
}

inline double arc_length(const AcquisitionGeometry& g) {
  return g.arc_radius * (2.0 * std::numbers::pi - 2.0 * arc_start_angle(g));
}

/// Detectors at arc-angle midpoints of n equal sub-arcs of gamma.
inline std::vector<BoundaryPoint> detector_points(const AcquisitionGeometry& g) {
  g.validate();
  const double a0 = arc_start_angle(g);
  const double span = 2.0 * std::numbers::pi - 2.0 * a0;
  const double step = span / g.n_detectors;
  const double w = g.arc_radius * step;
  std::vector<BoundaryPoint> pts;
  pts.reserve(g.n_detectors);
  for (int k = 0; k < g.n_detectors; ++k) {
    const double t = a0 + (k + 0.5) * step;
    pts.push_back({polar(g.arc_radius, t), polar(1.0, t), w});
  }
  return pts;
}

/// Length of the circular part and of the vertical chord of the ROI boundary.
struct BoundaryLengths {
  double arc;
  double chord;
  double total() const { return arc + chord; }
};

inline BoundaryLengths roi_boundary_lengths(const AcquisitionGeometry& g) {
  if (g.full_disk_roi()) return {2.0 * std::numbers::pi * g.roi_radius, 0.0};
  const double b0 = std::acos(g.x_right / g.roi_radius);
  const double half_chord = std::sqrt(g.roi_radius * g.roi_radius - g.x_right * g.x_right);
  return {g.roi_radius * (2.0 * std::numbers::pi - 2.0 * b0), 2.0 * half_chord};
}

/// Collocation points on the ROI boundary. The count is split between the
/// circular part and the chord in proportion to their lengths; each part uses
/// the midpoint rule, so the two corners are never collocation points.
inline std::vector<BoundaryPoint> boundary_collocation(const AcquisitionGeometry& g) {
  g.validate();
  const BoundaryLengths len = roi_boundary_lengths(g);
  int n_arc = g.n_collocation;
  int n_chord = 0;
  if (len.chord > 0) {
    n_arc = static_cast<int>(std::lround(g.n_collocation * len.arc / len.total()));
    n_arc = std::clamp(n_arc, 1, g.n_collocation - 1);
    n_chord = g.n_collocation - n_arc;
  }
  std::vector<BoundaryPoint> pts;
  pts.reserve(g.n_collocation);
  const double b0 = g.full_disk_roi() ? 0.0 : std::acos(g.x_right / g.roi_radius);
  const double arc_step = (2.0 * std::numbers::pi - 2.0 * b0) / n_arc;
  for (int c = 0; c < n_arc; ++c) {
    const double t = b0 + (c + 0.5) * arc_step;
    pts.push_back({polar(g.roi_radius, t), polar(1.0, t), len.arc / n_arc});
  }
  if (n_chord > 0) {
    const double half_chord = 0.5 * len.chord;
    const double step = len.chord / n_chord;
    for (int c = 0; c < n_chord; ++c)
      pts.push_back({{g.x_right, -half_chord + (c + 0.5) * step}, {1.0, 0.0}, step});
  }
  return pts;
}

/// Every line through the ROI meets the arc.
inline bool visibility_satisfied(const AcquisitionGeometry& g) {
  g.validate();
  return g.z_right >= g.x_right;
}

inline bool inside_roi(const AcquisitionGeometry& g, Vec2 p) {
  return dot(p, p) < g.roi_radius * g.roi_radius && p.x < g.x_right;
}

}  // namespace tato
