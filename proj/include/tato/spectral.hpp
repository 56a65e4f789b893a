#pragma once

// Reconstruction from circular integrals: radial Bessel/Neumann transforms,
// Fourier coefficients on the polar grid, low-pass filtering, the slice
// theorem to get classical Radon projections, and filtered backprojection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "tato/densities.hpp"
#include "tato/error.hpp"
#include "tato/forward.hpp"
#include "tato/geometry.hpp"
#include "tato/image.hpp"
#include "tato/parallel.hpp"

namespace tato {

/// f^(xi_ij) with xi_ij = lambda_i (cos theta_j, sin theta_j) and the
/// convention f^(xi) = (1/2pi) int f(x) exp(-i xi . x) dx.
struct PolarSpectrum {
  std::vector<double> lambdas;
  std::vector<double> thetas;  // uniform over [0, 2pi)
  Eigen::MatrixXcd values;     // n_lambda x n_theta
  std::optional<double> dc;    // f^(0) when known from the data
};

/// G_J(lambda, z_k) and G_Y(lambda, z_k). Both are real.
struct RadialTransform {
  std::vector<double> g_j;
  std::vector<double> g_y;
};

namespace detail {

/// Trapezoid weights for r_m = (m + 1) dr, m = 0..M-1, with g(0) = 0 as the
/// implicit left endpoint.
inline Eigen::VectorXd radial_weights(int n_radii, double dr) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_radii, dr);
  if (n_radii > 0) w(n_radii - 1) = 0.5 * dr;
  return w;
}

}  // namespace detail

inline RadialTransform radial_transforms(const Projections& proj, double lambda) {
  if (!(lambda > 0)) throw DomainError("radial_transforms: lambda must be positive");
  const int m = proj.n_radii();
  const Eigen::VectorXd w = detail::radial_weights(m, proj.r_step);
  Eigen::VectorXd kj(m), ky(m);
  for (int r = 0; r < m; ++r) {
    const double x = lambda * proj.radius(r);
    kj(r) = w(r) * boost::math::cyl_bessel_j(0, x, specfun::detail::Policy());
    ky(r) = w(r) * boost::math::cyl_neumann(0, x, specfun::detail::Policy());
  }
  const Eigen::VectorXd gj = proj.values * kj;
  const Eigen::VectorXd gy = proj.values * ky;
  return {{gj.data(), gj.data() + gj.size()}, {gy.data(), gy.data() + gy.size()}};
}

/// f^(0) = (1/2pi) int f, and int_0^inf g(z, r) dr = int f for every detector
/// once the radii reach past the ROI. Averaged over detectors.
inline std::optional<double> mass_dc(const Projections& proj) {
  const auto& g = proj.geometry;
  const double reach = g.arc_radius + g.roi_radius;
  if (proj.n_radii() == 0 || proj.radius(proj.n_radii() - 1) < reach - 1e-12) return std::nullopt;
  const Eigen::VectorXd w = detail::radial_weights(proj.n_radii(), proj.r_step);
  const Eigen::VectorXd mass = proj.values * w;
  return mass.mean() / (2.0 * std::numbers::pi);
}

/// f^(xi_ij) = (1/2pi) sum_k w_k [rho_J G_J + rho_Y G_Y] on the density grid.
inline PolarSpectrum fourier_coefficients(const Projections& proj, const DensitySet& set) {
  if (!(proj.geometry == set.geometry))
    throw MismatchError("projections and densities were made for different geometries");
  if (proj.values.rows() != static_cast<Eigen::Index>(set.n_detectors()))
    throw MismatchError("projection rows differ from the detector count");
  const auto dets = detector_points(set.geometry);
  const auto nl = static_cast<Eigen::Index>(set.n_lambda());
  const auto nt = static_cast<Eigen::Index>(set.n_theta);
  const auto ns = static_cast<Eigen::Index>(set.n_stored());
  const auto nd = static_cast<Eigen::Index>(set.n_detectors());

  PolarSpectrum spec;
  spec.lambdas = set.lambdas;
  spec.thetas.resize(nt);
  for (Eigen::Index j = 0; j < nt; ++j) spec.thetas[j] = set.theta(j);
  spec.values.resize(nl, nt);
  spec.dc = mass_dc(proj);

  const double inv2pi = 1.0 / (2.0 * std::numbers::pi);
  parallel_for(set.n_lambda(), [&](std::size_t i) {
    const auto gt = radial_transforms(proj, set.lambdas[i]);
    for (Eigen::Index s = 0; s < ns; ++s) {
      const auto rj = set.rho_j(i, s);
      const auto ry = set.rho_y(i, s);
      cplx acc{};
      for (Eigen::Index k = 0; k < nd; ++k) acc += dets[k].weight * (rj[k] * gt.g_j[k] + ry[k] * gt.g_y[k]);
      acc *= inv2pi;
      spec.values(i, s) = acc;
      spec.values(i, s + ns) = std::conj(acc);
    }
  });
  return spec;
}

enum class FilterKind { none, cosine };

/// eta(xi) = cos(pi/2 |xi| / lambda_nyquist), zero beyond the Nyquist frequency.
inline double lowpass_multiplier(FilterKind kind, double lambda, double lambda_nyquist) {
  if (kind == FilterKind::none) return 1.0;
  const double t = std::abs(lambda) / lambda_nyquist;
  return t >= 1.0 ? 0.0 : std::cos(0.5 * std::numbers::pi * t);
}

inline PolarSpectrum apply_lowpass(PolarSpectrum spec, FilterKind kind, double lambda_nyquist) {
  if (kind == FilterKind::none) return spec;
  if (!(lambda_nyquist > 0)) throw DomainError("Nyquist frequency must be positive");
  for (std::size_t i = 0; i < spec.lambdas.size(); ++i)
    spec.values.row(static_cast<Eigen::Index>(i)) *= lowpass_multiplier(kind, spec.lambdas[i], lambda_nyquist);
  return spec;
}

namespace detail {

inline void require_uniform(const std::vector<double>& v, double first, double step, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - (first + static_cast<double>(i) * step)) > 1e-9 * std::max(1.0, std::abs(v[i])))
      throw DomainError(std::string(what) + " are not uniform");
}

inline void check_polar(const PolarSpectrum& spec) {
  const auto nl = spec.lambdas.size();
  const auto nt = spec.thetas.size();
  if (nl == 0) throw DomainError("spectrum has no frequencies");
  if (nt < 2 || nt % 2 != 0) throw DomainError("spectrum needs an even number of angles");
  if (spec.values.rows() != static_cast<Eigen::Index>(nl) || spec.values.cols() != static_cast<Eigen::Index>(nt))
    throw DomainError("spectrum values have the wrong shape");
  const double dl = spec.lambdas.back() / static_cast<double>(nl);
  require_uniform(spec.lambdas, dl, dl, "frequencies");
  require_uniform(spec.thetas, 0.0, 2.0 * std::numbers::pi / static_cast<double>(nt), "angles");
}

/// f^(0) by quadratic extrapolation in lambda from the three smallest
/// frequencies (p(0) = 3F_1 - 3F_2 + F_3 on a uniform grid), averaged over theta.
inline double extrapolated_dc(const PolarSpectrum& spec) {
  const auto nt = spec.values.cols();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < nt; ++j) {
    cplx v;
    if (spec.values.rows() >= 3)
      v = 3.0 * spec.values(0, j) - 3.0 * spec.values(1, j) + spec.values(2, j);
    else if (spec.values.rows() == 2)
      v = 2.0 * spec.values(0, j) - spec.values(1, j);
    else
      v = spec.values(0, j);
    acc += v.real();
  }
  return acc / static_cast<double>(nt);
}

}  // namespace detail

/// Slice theorem: Rf(theta, s) = int f^(lambda theta) exp(i lambda s) dlambda,
/// sampled at s_m = m pi / lambda_max, m = -N..N-1, by an inverse FFT of
/// length 2N along each radial line. Angles fold to [0, pi).
inline Sinogram spectrum_to_sinogram(const PolarSpectrum& spec) {
  detail::check_polar(spec);
  const int n = static_cast<int>(spec.lambdas.size());
  const int len = 2 * n;
  const int nt = static_cast<int>(spec.thetas.size());
  const int half = nt / 2;
  const double dl = spec.lambdas.back() / n;
  const double ds = std::numbers::pi / spec.lambdas.back();
  const double dc = spec.dc ? *spec.dc : detail::extrapolated_dc(spec);

  std::vector<double> angles(half);
  for (int j = 0; j < half; ++j) angles[j] = spec.thetas[j];
  Sinogram sino(std::move(angles), -n * ds, ds, len);

  parallel_for(static_cast<std::size_t>(half), [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    std::vector<cplx> line(len), out;
    line[0] = dc;
    for (int k = 1; k < n; ++k) {
      line[k] = spec.values(k - 1, j);
      line[len - k] = spec.values(k - 1, j + half);
    }
    line[n] = 0.5 * (spec.values(n - 1, j) + spec.values(n - 1, j + half));
    Eigen::FFT<double> fft;
    fft.inv(out, line);  // includes 1/len
    for (int m = -n; m < n; ++m)
      sino.at(jj, m + n) = dl * len * out[(m + len) % len].real();
  });
  return sino;
}

/// Inverse of spectrum_to_sinogram for a sinogram on the same offsets:
/// f^(lambda theta) = (1/2pi) int Rf(theta, s) exp(-i lambda s) ds.
inline PolarSpectrum sinogram_to_spectrum(const Sinogram& sino) {
  const auto na = sino.n_angles();
  const int len = sino.n_offsets;
  if (na < 2) throw DomainError("sinogram needs at least two angles");
  if (len < 2 || len % 2 != 0) throw DomainError("sinogram needs an even number of offsets");
  const int n = len / 2;
  if (std::abs(sino.s_first + n * sino.s_step) > 1e-9 * sino.s_step)
    throw DomainError("sinogram offsets must be centred, s_first = -n/2 * s_step");
  detail::require_uniform(sino.angles, 0.0, std::numbers::pi / static_cast<double>(na), "angles");

  const double lmax = std::numbers::pi / sino.s_step;
  PolarSpectrum spec;
  spec.lambdas.resize(n);
  for (int i = 0; i < n; ++i) spec.lambdas[i] = (i + 1) * lmax / n;
  spec.thetas.resize(2 * na);
  for (std::size_t j = 0; j < 2 * na; ++j) spec.thetas[j] = std::numbers::pi * static_cast<double>(j) / na;
  spec.values.resize(n, static_cast<Eigen::Index>(2 * na));
  std::vector<double> dcs(na);

  const double scale = sino.s_step / (2.0 * std::numbers::pi);
  parallel_for(na, [&](std::size_t j) {
    std::vector<cplx> line(len), out;
    for (int m = -n; m < n; ++m) line[(m + len) % len] = sino.at(j, m + n);
    Eigen::FFT<double> fft;
    fft.fwd(out, line);
    const auto jj = static_cast<Eigen::Index>(j);
    dcs[j] = scale * out[0].real();
    for (int k = 1; k < n; ++k) {
      spec.values(k - 1, jj) = scale * out[k];
      spec.values(k - 1, jj + static_cast<Eigen::Index>(na)) = scale * out[len - k];
    }
    spec.values(n - 1, jj) = scale * out[n];
    spec.values(n - 1, jj + static_cast<Eigen::Index>(na)) = scale * out[n];
  });
  double dc = 0.0;
  for (double v : dcs) dc += v;
  spec.dc = dc / static_cast<double>(na);
  return spec;
}

/// Band-limited ramp kernel at t = u * ds, cut off at pi / ds:
///   h(u) = (1/ds^2) [ sin(pi u) / (2 pi u) - sin^2(pi u / 2) / (pi^2 u^2) ],  h(0) = 1/(4 ds^2).
inline double bandlimited_ramp(double u, double ds) {
  const double inv = 1.0 / (ds * ds);
  if (std::abs(u) < 1e-12) return 0.25 * inv;
  const double pu = std::numbers::pi * u;
  const double sh = std::sin(0.5 * pu);
  return inv * (std::sin(pu) / (2.0 * pu) - sh * sh / (pu * pu));
}

/// Filtered backprojection onto `grid`. The filtered projection
/// Q = Rf * h is evaluated on an offset lattice `oversample` times finer than
/// the sinogram (same band-limited kernel at fractional shifts), then
/// interpolated linearly. f(x) = (pi / n_angles) sum_j Q(theta_j, x . theta_j).
inline Image fbp(const Sinogram& sino, const GridSpec& grid, int oversample = 16) {
  grid.validate();
  const auto na = sino.n_angles();
  if (na < 2) throw DomainError("fbp needs at least two angles");
  if (sino.n_offsets < 1 || !(sino.s_step > 0)) throw DomainError("fbp needs uniform offsets");
  if (oversample < 1) throw DomainError("oversampling factor must be positive");
  detail::require_uniform(sino.angles, sino.angles.front(), std::numbers::pi / static_cast<double>(na), "angles");

  const int p = oversample;
  const double ds = sino.s_step;
  const double fine = ds / p;
  const double reach = grid.half_width * std::numbers::sqrt2 + 2.0 * ds;
  // Fine lattice t_q = s_first + q * fine, q in [q_lo, q_hi].
  const int q_lo = static_cast<int>(std::floor((-reach - sino.s_first) / fine));
  const int q_hi = static_cast<int>(std::ceil((reach - sino.s_first) / fine));
  const int nq = q_hi - q_lo + 1;
  const int mo = sino.n_offsets;
  // Kernel table over every shift q - m p that occurs.
  const int k_lo = q_lo - (mo - 1) * p;
  std::vector<double> kern(static_cast<std::size_t>(q_hi - k_lo + 1));
  for (std::size_t i = 0; i < kern.size(); ++i)
    kern[i] = bandlimited_ramp(static_cast<double>(k_lo + static_cast<int>(i)) / p, ds);

  std::vector<std::vector<double>> q(na, std::vector<double>(nq, 0.0));
  parallel_for(na, [&](std::size_t j) {
    for (int qi = 0; qi < nq; ++qi) {
      const int qq = q_lo + qi;
      double acc = 0.0;
      for (int m = 0; m < mo; ++m) acc += sino.at(j, m) * kern[qq - m * p - k_lo];
      q[j][qi] = ds * acc;
    }
  });

  std::vector<double> cs(na), sn(na);
  for (std::size_t j = 0; j < na; ++j) {
    cs[j] = std::cos(sino.angles[j]);
    sn[j] = std::sin(sino.angles[j]);
  }
  Image img(grid);
  const double weight = std::numbers::pi / static_cast<double>(na);
  parallel_for(static_cast<std::size_t>(grid.n), [&](std::size_t row) {
    const int iy = static_cast<int>(row);
    for (int ix = 0; ix < grid.n; ++ix) {
      const Vec2 x = img.position(iy, ix);
      double acc = 0.0;
      for (std::size_t j = 0; j < na; ++j) {
        const double t = x.x * cs[j] + x.y * sn[j];
        const double u = (t - sino.s_first) / fine - q_lo;
        const int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, nq - 2);
        const double a = u - i0;
        acc += (1.0 - a) * q[j][i0] + a * q[j][i0 + 1];
      }
      img.at(iy, ix) = weight * acc;
    }
  });
  return img;
}

/// radial_transforms -> fourier_coefficients -> apply_lowpass ->
/// spectrum_to_sinogram -> fbp.
inline Image reconstruct(const Projections& proj, const DensitySet& set, FilterKind filter, const GridSpec& grid) {
  grid.validate();
  PolarSpectrum spec = fourier_coefficients(proj, set);
  spec = apply_lowpass(std::move(spec), filter, grid.nyquist());
  return fbp(spectrum_to_sinogram(spec), grid);
}

struct ErrorMetrics {
  double max_abs = 0.0;
  double rel_l2 = 0.0;
};

/// Max and relative L2 difference over the grid nodes inside the ROI.
inline ErrorMetrics error_metrics(const Image& img, const Image& ref, const AcquisitionGeometry& g) {
  if (!(img.grid == ref.grid)) throw MismatchError("images live on different grids");
  ErrorMetrics e;
  double num = 0.0, den = 0.0;
  for (int iy = 0; iy < img.grid.n; ++iy)
    for (int ix = 0; ix < img.grid.n; ++ix) {
      if (!inside_roi(g, img.position(iy, ix))) continue;
      const double d = img.at(iy, ix) - ref.at(iy, ix);
      e.max_abs = std::max(e.max_abs, std::abs(d));
      num += d * d;
      den += ref.at(iy, ix) * ref.at(iy, ix);
    }
  e.rel_l2 = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  return e;
}

}  // namespace tato
