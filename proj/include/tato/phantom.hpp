#pragma once

// Phantoms: sums of C^8 radial bells and sums of disk indicators.

#include <cmath>
#include <numbers>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "tato/geometry.hpp"
#include "tato/image.hpp"
#include "tato/parallel.hpp"

namespace tato {

namespace detail {

/// c0 * int_0^a sin^8(pi s) ds for 0 <= a <= 1/2. The closed form cancels
/// badly for small a, where Gauss-Legendre keeps full relative accuracy.
inline double bell_tail(double a) {
  constexpr double pi = std::numbers::pi;
  constexpr double c0 = 128.0 / 35.0;
  if (a < 0.125) {
    auto f = [](double s) {
      const double v = std::sin(pi * s);
      const double v2 = v * v;
      return v2 * v2 * v2 * v2;
    };
    return c0 * boost::math::quadrature::gauss<double, 15>::integrate(f, 0.0, a);
  }
  return c0 * (35.0 / 128.0 * a - 7.0 / (32.0 * pi) * std::sin(2 * pi * a) +
               7.0 / (128.0 * pi) * std::sin(4 * pi * a) - 1.0 / (96.0 * pi) * std::sin(6 * pi * a) +
               1.0 / (1024.0 * pi) * std::sin(8 * pi * a));
}

}  // namespace detail

/// h(t) = c0 * int_0^{1-|t|} sin^8(pi s) ds for |t| <= 1, zero otherwise,
/// normalized so that h(0) = 1. The integrand is symmetric about s = 1/2, so
/// h(t) = 1 - c0 * int_0^{|t|} sin^8(pi s) ds as well.
inline double bell(double t) {
  const double a = std::abs(t);
  if (a >= 1.0) return 0.0;
  return a <= 0.5 ? 1.0 - detail::bell_tail(a) : detail::bell_tail(1.0 - a);
}

struct Bump {
  Vec2 center;
  double radius = 1.0;
};

struct SmoothPhantom {
  std::vector<Bump> bumps;

  double eval(Vec2 p) const {
    double v = 0.0;
    for (const Bump& b : bumps) {
      const Vec2 d = p - b.center;
      const double r2 = dot(d, d);
      if (r2 >= b.radius * b.radius) continue;
      v += bell(std::sqrt(r2) / b.radius);
    }
    return v;
  }
};

struct Disk {
  Vec2 center;
  double radius = 1.0;
  double amplitude = 1.0;
};

struct DiskPhantom {
  std::vector<Disk> disks;

  double eval(Vec2 p) const {
    double v = 0.0;
    for (const Disk& d : disks) {
      const Vec2 q = p - d.center;
      if (dot(q, q) < d.radius * d.radius) v += d.amplitude;
    }
    return v;
  }
};

using Phantom = std::variant<SmoothPhantom, DiskPhantom>;

inline double eval(const Phantom& f, Vec2 p) {
  return std::visit([p](const auto& ph) { return ph.eval(p); }, f);
}

/// Pointwise samples of the phantom at the grid nodes.
inline Image render(const Phantom& f, const GridSpec& grid) {
  grid.validate();
  Image img(grid);
  parallel_for(grid.n, [&](std::size_t iy) {
    for (int ix = 0; ix < grid.n; ++ix)
      img.at(static_cast<int>(iy), ix) = eval(f, img.position(static_cast<int>(iy), ix));
  });
  return img;
}

/// True when every bump or disk support lies inside the ROI closure.
inline bool support_inside_roi(const Phantom& f, const AcquisitionGeometry& g) {
  auto fits = [&](Vec2 c, double r) {
    return norm(c) + r <= g.roi_radius && c.x + r <= g.x_right;
  };
  if (const auto* s = std::get_if<SmoothPhantom>(&f)) {
    for (const Bump& b : s->bumps)
      if (!fits(b.center, b.radius)) return false;
  } else {
    for (const Disk& d : std::get<DiskPhantom>(f).disks)
      if (!fits(d.center, d.radius)) return false;
  }
  return true;
}

/// Two bells centred at (0.3, 0.3) and (-0.4, 0.2) with radii 0.55 and 0.5.
inline SmoothPhantom two_bump_phantom() {
  return {{{{0.3, 0.3}, 0.55}, {{-0.4, 0.2}, 0.5}}};
}

/// Six unit-amplitude disks filling the unit disk, three in each half-plane.
/// An approximation of the published figures, not a copy of them.
inline DiskPhantom default_disk_phantom() {
  return {{{{-0.45, 0.35}, 0.3, 1.0},
           {{-0.55, -0.3}, 0.2, 1.0},
           {{-0.2, -0.05}, 0.12, 1.0},
           {{0.4, 0.4}, 0.25, 1.0},
           {{0.45, -0.3}, 0.3, 1.0},
           {{0.15, -0.7}, 0.15, 1.0}}};
}

/// Six unit-amplitude disks inside the left half-disk x_1 < 0.
inline DiskPhantom default_half_disk_phantom() {
  return {{{{-0.45, 0.35}, 0.3, 1.0},
           {{-0.55, -0.3}, 0.2, 1.0},
           {{-0.2, -0.05}, 0.12, 1.0},
           {{-0.3, 0.75}, 0.12, 1.0},
           {{-0.25, -0.6}, 0.15, 1.0},
           {{-0.8, 0.05}, 0.1, 1.0}}};
}

/// Disks of a phantom whose supports lie in the closed ROI.
inline DiskPhantom restrict_to_roi(const DiskPhantom& f, const AcquisitionGeometry& g) {
  DiskPhantom out;
  for (const Disk& d : f.disks)
    if (support_inside_roi(Phantom{DiskPhantom{{d}}}, g)) out.disks.push_back(d);
  return out;
}

}  // namespace tato
