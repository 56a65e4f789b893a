#include <cmath>
#include <cstring>
#include <numbers>

#include <gtest/gtest.h>

#include "tato/forward.hpp"

using namespace tato;

namespace {

// Indicator quadrature of the circle |x - z| = r against the disk |x - c| < rho.
double sampled_arc(Vec2 z, double r, Vec2 c, double rho, int samples) {
  int inside = 0;
  for (int i = 0; i < samples; ++i) {
    const double phi = 2 * std::numbers::pi * (i + 0.5) / samples;
    const Vec2 x = z + polar(r, phi);
    if (norm(x - c) < rho) ++inside;
  }
  return 2 * std::numbers::pi * r * inside / samples;
}

}  // namespace

TEST(CircleDisk, WhollyInside) {
  EXPECT_NEAR(circle_disk_integral({0.2, 0.1}, 0.3, {0.2, 0.1}, 0.5), 2 * std::numbers::pi * 0.3, 1e-15);
}

TEST(CircleDisk, ExternalTangency) { EXPECT_EQ(circle_disk_integral({0, 0}, 0.4, {1, 0}, 0.6), 0.0); }

TEST(CircleDisk, ThirdOfUnitCircle) {
  const double v = circle_disk_integral({0, 0}, 1.0, {1, 0}, 1.0);
  EXPECT_NEAR(v, 2 * std::numbers::pi / 3, 1e-15);
  EXPECT_NEAR(v, sampled_arc({0, 0}, 1.0, {1, 0}, 1.0, 1'000'000), 1e-5);
}

TEST(CircleDisk, AgreesWithSampledArcs) {
  const Vec2 z{-1.1, 0.4};
  for (double r : {0.5, 0.9, 1.2, 1.6})
    EXPECT_NEAR(circle_disk_integral(z, r, {-0.3, 0.1}, 0.45), sampled_arc(z, r, {-0.3, 0.1}, 0.45, 1'000'000), 1e-5)
        << r;
}

TEST(CircleDisk, RejectsNonPositiveRadii) {
  EXPECT_THROW(circle_disk_integral({0, 0}, 0.0, {1, 0}, 1.0), DomainError);
  EXPECT_THROW(circle_disk_integral({0, 0}, 1.0, {1, 0}, 0.0), DomainError);
}

TEST(Simulate, ZeroPhantom) {
  const auto g = AcquisitionGeometry::geometry1(40);
  const auto p = simulate(DiskPhantom{}, g, {{50, 0.05}, 2048});
  EXPECT_EQ(p.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, RadiiStartAtOneStep) {
  const auto g = AcquisitionGeometry::geometry1(10);
  const auto p = simulate(DiskPhantom{}, g, {{5, 0.1}, 2048});
  EXPECT_DOUBLE_EQ(p.radius(0), 0.1);
  EXPECT_DOUBLE_EQ(p.radius(4), 0.5);
}

TEST(Simulate, SingleDiskColumns) {
  const auto g = AcquisitionGeometry::geometry2(30);
  const Disk d{{-0.3, 0.2}, 0.4, 1.0};
  const auto p = simulate(DiskPhantom{{d}}, g, {{60, 0.04}, 2048});
  const auto dets = detector_points(g);
  for (int k = 0; k < g.n_detectors; ++k)
    for (int m = 0; m < p.n_radii(); ++m)
      EXPECT_EQ(p.values(k, m), circle_disk_integral(dets[k].position, p.radius(m), d.center, d.radius));
}

TEST(Simulate, DiskLinearity) {
  const auto g = AcquisitionGeometry::geometry1(25);
  const RadialSampling rs{70, 1.0 / 32};
  const Disk a{{0.1, 0.2}, 0.3, 1.0}, b{{-0.4, -0.1}, 0.25, 1.0};
  const auto pa = simulate(DiskPhantom{{a}}, g, {rs, 2048});
  const auto pb = simulate(DiskPhantom{{b}}, g, {rs, 2048});
  const auto pab = simulate(DiskPhantom{{{a.center, a.radius, 2.5}, {b.center, b.radius, -0.7}}}, g, {rs, 2048});
  EXPECT_LT((pab.values - (2.5 * pa.values - 0.7 * pb.values)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulate, SmoothQuadratureConverged) {
  const auto g = AcquisitionGeometry::geometry1(20);
  const RadialSampling rs{74, 1.0 / 32};
  const auto p1 = simulate(two_bump_phantom(), g, {rs, 2048});
  const auto p2 = simulate(two_bump_phantom(), g, {rs, 4096});
  EXPECT_LE((p1.values - p2.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Simulate, QuadratureTooCoarse) {
  EXPECT_THROW(simulate(two_bump_phantom(), AcquisitionGeometry::geometry1(10), {{10, 0.1}, 8}), Error);
}

TEST(Simulate, ZeroBeforeFirstArrivalAndNonnegative) {
  const auto g = AcquisitionGeometry::geometry1(60);
  const GridSpec grid{65, 1.0};
  for (const Phantom& f : {Phantom{two_bump_phantom()}, Phantom{default_disk_phantom()}}) {
    const auto p = simulate(f, g, {default_radial_sampling(g, grid), 2048});
    for (int k = 0; k < g.n_detectors; ++k)
      for (int m = 0; m < p.n_radii(); ++m) {
        EXPECT_GE(p.values(k, m), 0.0);
        if (p.radius(m) < g.arc_radius - g.roi_radius) {
          EXPECT_EQ(p.values(k, m), 0.0);
        }
      }
  }
}

TEST(Simulate, ConcentricDiskMass) {
  // Detector at the centre of a disk: int_0^inf g dr = pi rho^2.
  const double rho = 0.5, dr = 1e-3;
  double mass = 0.0;
  const int m_max = static_cast<int>(std::round(rho / dr));
  for (int m = 1; m <= m_max; ++m) {
    const double w = m == m_max ? 0.5 * dr : dr;
    mass += w * circle_disk_integral({0.0, 0.0}, m * dr, {0.0, 0.0}, rho);
  }
  EXPECT_NEAR(mass, std::numbers::pi * rho * rho, 1e-12);
}

TEST(DefaultRadii, CoverTheRoi) {
  const auto g = AcquisitionGeometry::geometry1();
  const GridSpec grid{129, 1.0};
  const auto rs = default_radial_sampling(g, grid);
  EXPECT_DOUBLE_EQ(rs.r_step, 1.0 / 64);
  EXPECT_EQ(rs.n_radii, 148);
  EXPECT_GE(rs.n_radii * rs.r_step, g.arc_radius + g.roi_radius);
  const auto per_node = default_radial_sampling(g, grid, true);
  EXPECT_EQ(per_node.n_radii, 129);
}

TEST(Noise, ZeroLevelIsIdentity) {
  const auto g = AcquisitionGeometry::geometry1(20);
  const auto p = simulate(default_disk_phantom(), g, {{74, 1.0 / 32}, 2048});
  const auto q = add_noise(p, 0.0, 5);
  EXPECT_EQ(std::memcmp(p.values.data(), q.values.data(), sizeof(double) * p.values.size()), 0);
}

TEST(Noise, ExactRatioAndDeterminism) {
  const auto g = AcquisitionGeometry::geometry1(20);
  const auto p = simulate(default_disk_phantom(), g, {{74, 1.0 / 32}, 2048});
  const auto q = add_noise(p, 0.15, 42);
  EXPECT_NEAR((q.values - p.values).norm() / p.values.norm(), 0.15, 1e-12);
  EXPECT_EQ(q.noise_seed, 42u);
  EXPECT_EQ(q.noise_level, 0.15);
  const auto r = add_noise(p, 0.15, 42);
  EXPECT_EQ(std::memcmp(q.values.data(), r.values.data(), sizeof(double) * q.values.size()), 0);
  const auto s = add_noise(p, 0.15, 43);
  EXPECT_GT((s.values - q.values).norm(), 0.0);
}

TEST(Noise, ZeroSignalRejected) {
  const auto g = AcquisitionGeometry::geometry1(10);
  const auto p = simulate(DiskPhantom{}, g, {{10, 0.1}, 2048});
  EXPECT_THROW(add_noise(p, 0.15, 1), Error);
}

TEST(Radon, DiskChord) {
  const DiskPhantom f{{{{0.0, 0.0}, 0.5, 1.0}}};
  const auto s = radon_transform(f, {0.0, 1.0}, -1.0, 0.25, 9);
  EXPECT_NEAR(s.at(1, 4), 1.0, 1e-15);
  EXPECT_NEAR(s.at(0, 5), 2 * std::sqrt(0.25 - 0.0625), 1e-15);
  EXPECT_EQ(s.at(0, 0), 0.0);
}
