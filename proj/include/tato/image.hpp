#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tato/error.hpp"
#include "tato/geometry.hpp"

namespace tato {

/// n x n equispaced nodes covering [-half_width, half_width]^2.
struct GridSpec {
  int n = 129;
  double half_width = 1.0;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

  double step() const { return 2.0 * half_width / (n - 1); }
  double node(int i) const { return -half_width + i * step(); }
  /// Nyquist frequency of the grid, pi / step.
  double nyquist() const { return std::numbers::pi / step(); }
  std::size_t size() const { return static_cast<std::size_t>(n) * n; }

  void validate() const {
    if (n < 2) throw Error("grid needs at least two nodes per axis");
    if (!(half_width > 0)) throw Error("grid half-width must be positive");
  }
};

/// Real samples on a GridSpec; row index iy runs along x_2, column ix along x_1.
struct Image {
  GridSpec grid;
  std::vector<double> values;

  Image() = default;
  explicit Image(GridSpec g) : grid(g), values(g.size(), 0.0) {}

  double& at(int iy, int ix) { return values[static_cast<std::size_t>(iy) * grid.n + ix]; }
  double at(int iy, int ix) const { return values[static_cast<std::size_t>(iy) * grid.n + ix]; }
  Vec2 position(int iy, int ix) const { return {grid.node(ix), grid.node(iy)}; }
};

/// Classical Radon projections Rf(theta_j, s_m) on uniform angles in [0, pi)
/// and uniform offsets s_m = s_first + m * s_step.
struct Sinogram {
  std::vector<double> angles;
  double s_first = 0.0;
  double s_step = 1.0;
  int n_offsets = 0;
  std::vector<double> values;  // angle-major

  Sinogram() = default;
  Sinogram(std::vector<double> a, double first, double step, int n)
      : angles(std::move(a)), s_first(first), s_step(step), n_offsets(n),
        values(angles.size() * static_cast<std::size_t>(n), 0.0) {}

  std::size_t n_angles() const { return angles.size(); }
  double offset(int m) const { return s_first + m * s_step; }
  double& at(std::size_t j, int m) { return values[j * n_offsets + m]; }
  double at(std::size_t j, int m) const { return values[j * n_offsets + m]; }
};

}  // namespace tato
