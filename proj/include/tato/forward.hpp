#pragma once

// Forward model: integrals g(z, r) of a phantom over circles of radius r
// centred at the detectors, plus calibrated white noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tato/error.hpp"
#include "tato/geometry.hpp"
#include "tato/image.hpp"
#include "tato/parallel.hpp"
#include "tato/phantom.hpp"

namespace tato {

/// Circular integrals g[k][m] for detector k and radius r_m = (m + 1) * r_step.
/// The implicit sample g(z, 0) = 0 is not stored.
struct Projections {
  AcquisitionGeometry geometry;
  double r_step = 0.0;
  Eigen::MatrixXd values;  // n_detectors x n_radii
  double noise_level = 0.0;
  std::uint64_t noise_seed = 0;

  int n_radii() const { return static_cast<int>(values.cols()); }
  double radius(int m) const { return (m + 1) * r_step; }
  std::vector<double> radii() const {
    std::vector<double> r(n_radii());
    for (int m = 0; m < n_radii(); ++m) r[m] = radius(m);
    return r;
  }
};

/// Length of the part of the circle |x - z| = r inside the disk |x - c| < rho.
inline double circle_disk_integral(Vec2 z, double r, Vec2 c, double rho) {
  if (!(r > 0) || !(rho > 0)) throw DomainError("circle_disk_integral: radii must be positive");
  const double d = norm(z - c);
  if (d + r <= rho) return 2.0 * std::numbers::pi * r;
  if (d >= r + rho || r >= d + rho) return 0.0;
  const double arg = std::clamp((d * d + r * r - rho * rho) / (2.0 * d * r), -1.0, 1.0);
  return 2.0 * r * std::acos(arg);
}

struct RadialSampling {
  int n_radii = 0;
  double r_step = 0.0;
};

/// Radial step equal to the reconstruction grid step. By default enough radii
/// to reach every point of the ROI disk (r up to R_gamma + R); with
/// grid_radii, exactly as many radii as grid nodes per axis.
inline RadialSampling default_radial_sampling(const AcquisitionGeometry& g, const GridSpec& grid,
                                              bool grid_radii = false) {
  const double step = grid.step();
  if (grid_radii) return {grid.n, step};
  const double reach = g.arc_radius + g.roi_radius;
  return {static_cast<int>(std::ceil(reach / step - 1e-9)), step};
}

struct SimulationOptions {
  RadialSampling radial;
  int quadrature = 2048;  // angular nodes for smooth phantoms
};

namespace detail {

inline double smooth_circle_integral(const SmoothPhantom& f, Vec2 z, double r,
                                     std::span<const double> cs, std::span<const double> sn) {
  const int q = static_cast<int>(cs.size());
  const double dphi = 2.0 * std::numbers::pi / q;
  double sum = 0.0;
  for (const Bump& b : f.bumps) {
    const Vec2 dz = b.center - z;
    const double d = norm(dz);
    if (std::abs(d - r) >= b.radius) continue;  // circle misses this bump
    // Angular window of the circle that can lie inside the bump support;
    // nodes outside it contribute exactly zero.
    int lo = 0;
    int count = q;
    if (d > 0 && r + d > b.radius) {
      const double cosw = std::clamp((r * r + d * d - b.radius * b.radius) / (2.0 * r * d), -1.0, 1.0);
      const double half = std::acos(cosw);
      const double centre = std::atan2(dz.y, dz.x);
      lo = static_cast<int>(std::floor((centre - half) / dphi)) - 1;
      const int hi = static_cast<int>(std::ceil((centre + half) / dphi)) + 1;
      count = std::min(q, hi - lo + 1);
    }
    const double inv_r2 = 1.0 / (b.radius * b.radius);
    for (int t = 0; t < count; ++t) {
      const int l = ((lo + t) % q + q) % q;
      const double px = z.x + r * cs[l] - b.center.x;
      const double py = z.y + r * sn[l] - b.center.y;
      const double s2 = (px * px + py * py) * inv_r2;
      if (s2 < 1.0) sum += bell(std::sqrt(s2));
    }
  }
  return r * dphi * sum;
}

}  // namespace detail

/// Simulates g(z_k, r_m). Disk phantoms are integrated exactly; smooth
/// phantoms use the composite trapezoid rule in the circle angle.
inline Projections simulate(const Phantom& f, const AcquisitionGeometry& g, const SimulationOptions& opt) {
  g.validate();
  if (opt.radial.n_radii < 1 || !(opt.radial.r_step > 0))
    throw Error("simulate: need at least one radius and a positive radial step");
  if (std::holds_alternative<SmoothPhantom>(f) && opt.quadrature < 16)
    throw Error("simulate: angular quadrature order must be at least 16");

  Projections p;
  p.geometry = g;
  p.r_step = opt.radial.r_step;
  p.values = Eigen::MatrixXd::Zero(g.n_detectors, opt.radial.n_radii);
  const auto dets = detector_points(g);

  std::vector<double> cs, sn;
  if (std::holds_alternative<SmoothPhantom>(f)) {
    cs.resize(opt.quadrature);
    sn.resize(opt.quadrature);
    for (int l = 0; l < opt.quadrature; ++l) {
      const double phi = 2.0 * std::numbers::pi * l / opt.quadrature;
      cs[l] = std::cos(phi);
      sn[l] = std::sin(phi);
    }
  }

  parallel_for(dets.size(), [&](std::size_t k) {
    const Vec2 z = dets[k].position;
    for (int m = 0; m < p.n_radii(); ++m) {
      const double r = p.radius(m);
      double v = 0.0;
      if (const auto* s = std::get_if<SmoothPhantom>(&f)) {
        v = detail::smooth_circle_integral(*s, z, r, cs, sn);
      } else {
        for (const Disk& d : std::get<DiskPhantom>(f).disks)
          v += d.amplitude * circle_disk_integral(z, r, d.center, d.radius);
      }
      p.values(static_cast<Eigen::Index>(k), m) = v;
    }
  });
  return p;
}

/// Adds i.i.d. Gaussian noise rescaled so that ||noise||_2 = level * ||data||_2
/// exactly. Deterministic for a given seed.
inline void add_scaled_noise(std::span<double> data, double level, std::uint64_t seed) {
  if (!(level >= 0)) throw Error("noise level must be non-negative");
  if (level == 0.0) return;
  double signal2 = 0.0;
  for (double v : data) signal2 += v * v;
  if (signal2 == 0.0) throw Error("cannot scale noise relative to an all-zero signal");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(data.size());
  double noise2 = 0.0;
  for (double& v : noise) {
    v = normal(rng);
    noise2 += v * v;
  }
  const double scale = level * std::sqrt(signal2 / noise2);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += scale * noise[i];
}

inline Projections add_noise(Projections p, double level, std::uint64_t seed) {
  add_scaled_noise(std::span<double>(p.values.data(), static_cast<std::size_t>(p.values.size())), level, seed);
  p.noise_level = level;
  p.noise_seed = seed;
  return p;
}

/// Classical Radon transform of a disk phantom, sampled on the given
/// angles and offsets: Rf(theta, s) = sum 2 a sqrt(rho^2 - (s - c.theta)^2).
inline Sinogram radon_transform(const DiskPhantom& f, std::vector<double> angles, double s_first,
                                double s_step, int n_offsets) {
  Sinogram sino(std::move(angles), s_first, s_step, n_offsets);
  for (std::size_t j = 0; j < sino.n_angles(); ++j) {
    const Vec2 dir = polar(1.0, sino.angles[j]);
    for (int m = 0; m < n_offsets; ++m) {
      double v = 0.0;
      for (const Disk& d : f.disks) {
        const double u = sino.offset(m) - dot(d.center, dir);
        if (std::abs(u) < d.radius) v += 2.0 * d.amplitude * std::sqrt(d.radius * d.radius - u * u);
      }
      sino.at(j, m) = v;
    }
  }
  return sino;
}

}  // namespace tato
