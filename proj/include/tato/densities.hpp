#pragma once

// Densities of single layer potentials approximating plane waves.
//
// For a wavevector xi = lambda (cos theta, sin theta) we look for densities
// (rho_J, rho_Y) on the detector arc such that
//
//   W_J(x) + W_Y(x) = sum_k w_k [J0(lambda |z_k - x|) rho_J(z_k)
//                              + Y0(lambda |z_k - x|) rho_Y(z_k)]
//                   ~= exp(-i xi . x)          for x in the ROI.
//
// On a closed circle the densities are known in closed form. On an open arc
// they are obtained from a truncated SVD of the operator mapping density
// pairs to (Dirichlet, lambda^-1 Neumann) traces on the ROI boundary; the
// number of retained singular triples is the largest one keeping the density
// norm below K * N(lambda).

#include <cmath>
#include <complex>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tato/error.hpp"
#include "tato/geometry.hpp"
#include "tato/image.hpp"
#include "tato/linalg.hpp"
#include "tato/parallel.hpp"
#include "tato/specfun.hpp"

namespace tato {

using cplx = std::complex<double>;

/// N(lambda) = sqrt( sum_{n in Z} 1 / |H_|n|^(1)(lambda R_gamma)|^2 ).
/// Summation stops once a term drops below 1e-16 of the partial sum.
inline double norm_threshold(double lambda, double arc_radius) {
  if (!(lambda > 0)) throw DomainError("norm_threshold: lambda must be positive");
  const double x = lambda * arc_radius;
  double sum = 1.0 / specfun::hankel1_abs2(0, x);
  // Y_n by forward recurrence, J_n directly.
  double y_prev = specfun::bessel_y(0, x);
  double y = specfun::bessel_y(1, x);
  for (int n = 1;; ++n) {
    const double j = specfun::bessel_j(n, x);
    const double h2 = j * j + y * y;
    const double term = std::isfinite(h2) ? 2.0 / h2 : 0.0;
    sum += term;
    if (n > x && term < 1e-16 * sum) break;
    const double y_next = (2.0 * n / x) * y - y_prev;
    y_prev = y;
    y = y_next;
  }
  return std::sqrt(sum);
}

/// Density values at the detector points.
struct DensityPair {
  std::vector<cplx> rho_j;
  std::vector<cplx> rho_y;
};

/// Weighted L2 norm sqrt( sum_k w_k (|rho_J|^2 + |rho_Y|^2) ).
inline double weighted_norm(const DensityPair& d, std::span<const BoundaryPoint> dets) {
  double s = 0.0;
  for (std::size_t k = 0; k < dets.size(); ++k)
    s += dets[k].weight * (std::norm(d.rho_j[k]) + std::norm(d.rho_y[k]));
  return std::sqrt(s);
}

/// Fourier coefficients of the full-circle densities,
///   a_n = J_n(lambda R_gamma) / (2 pi R_gamma |H_n|^2),
///   b_n = Y_n(lambda R_gamma) / (2 pi R_gamma |H_n|^2),  n = 0..n_max.
struct SeriesCoefficients {
  std::vector<double> a;
  std::vector<double> b;
};

inline SeriesCoefficients fullcircle_coefficients(double lambda, double arc_radius, int n_max) {
  const double x = lambda * arc_radius;
  const auto seq = specfun::bessel_sequence(n_max, x);
  SeriesCoefficients c;
  c.a.resize(n_max + 1);
  c.b.resize(n_max + 1);
  const double scale = 1.0 / (2.0 * std::numbers::pi * arc_radius);
  for (int n = 0; n <= n_max; ++n) {
    const double y = seq.y[n];
    if (!std::isfinite(y)) {
      c.a[n] = 0.0;
      c.b[n] = 0.0;
      continue;
    }
    const double h2 = seq.j[n] * seq.j[n] + y * y;
    c.a[n] = scale * seq.j[n] / h2;
    c.b[n] = scale * y / h2;
  }
  return c;
}

/// Order at which the full-circle series is cut: ceil(x + 10 x^{1/3} + 20).
inline int fullcircle_series_order(double lambda, double arc_radius) {
  const double x = lambda * arc_radius;
  return static_cast<int>(std::ceil(x + 10.0 * std::cbrt(x) + 20.0));
}

/// Highest circular mode the detector sampling resolves without aliasing.
inline int fullcircle_resolved_order(const AcquisitionGeometry& g, double lambda) {
  return std::min(fullcircle_series_order(lambda, g.arc_radius), (g.n_detectors - 1) / 2);
}

/// Largest coefficient magnitude max(|a_n|, |b_n|) at the series order
/// ceil(x + 10 x^{1/3} + 20), i.e. the size of the first neglected term.
inline double fullcircle_tail_term(double lambda, double arc_radius) {
  const int n = fullcircle_series_order(lambda, arc_radius);
  const auto c = fullcircle_coefficients(lambda, arc_radius, n);
  return std::max(std::abs(c.a[n]), std::abs(c.b[n]));
}

/// Exact densities for a closed circle of detectors, target exp(-i xi . x):
///   rho(z) = a_0 + 2 sum_{n>=1} a_n (-i)^n cos(n (theta_z - theta_xi)).
inline DensityPair fullcircle_densities(double lambda, double theta_xi, const AcquisitionGeometry& g) {
  g.validate();
  if (!g.closed_arc()) throw GeometryError("fullcircle_densities requires a closed detector circle");
  if (!(lambda > 0)) throw DomainError("fullcircle_densities: lambda must be positive");
  const int n_max = fullcircle_resolved_order(g, lambda);
  const auto c = fullcircle_coefficients(lambda, g.arc_radius, n_max);
  std::vector<cplx> phase(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    static constexpr cplx minus_i_pow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    phase[n] = minus_i_pow[n % 4];
  }
  const auto dets = detector_points(g);
  DensityPair d;
  d.rho_j.resize(dets.size());
  d.rho_y.resize(dets.size());
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const double phi = std::atan2(dets[k].position.y, dets[k].position.x) - theta_xi;
    cplx sj = c.a[0];
    cplx sy = c.b[0];
    for (int n = 1; n <= n_max; ++n) {
      const double cs = 2.0 * std::cos(n * phi);
      sj += c.a[n] * cs * phase[n];
      sy += c.b[n] * cs * phase[n];
    }
    d.rho_j[k] = sj;
    d.rho_y[k] = sy;
  }
  return d;
}

/// Discretized layer-potential operator A.
///
/// raw maps density values at the detectors to trace values at the
/// collocation points:
///   rows [0, nc): Dirichlet trace, rows [nc, 2nc): lambda^-1 normal derivative;
///   cols [0, nd): J0 kernel,       cols [nd, 2nd): Y0 kernel;
///   raw(c, k)        =  J0(lambda d) w_k
///   raw(nc + c, k)   = -J1(lambda d) ((x_c - z_k) . n_c / d) w_k,   d = |x_c - z_k|,
/// and likewise with Y0, Y1 in the second column block. All entries are real.
struct OperatorMatrix {
  Eigen::MatrixXd raw;
  std::vector<BoundaryPoint> detectors;
  std::vector<BoundaryPoint> collocation;
  double lambda = 0.0;

  Eigen::VectorXd detector_sqrt_weights() const {
    const auto nd = static_cast<Eigen::Index>(detectors.size());
    Eigen::VectorXd s(2 * nd);
    for (Eigen::Index k = 0; k < nd; ++k) s(k) = s(nd + k) = std::sqrt(detectors[k].weight);
    return s;
  }
  Eigen::VectorXd collocation_sqrt_weights() const {
    const auto nc = static_cast<Eigen::Index>(collocation.size());
    Eigen::VectorXd s(2 * nc);
    for (Eigen::Index c = 0; c < nc; ++c) s(c) = s(nc + c) = std::sqrt(collocation[c].weight);
    return s;
  }

  /// Matrix of A between the weighted spaces, in orthonormal coordinates:
  /// B = C^{1/2} raw W^{-1/2}. Its SVD approximates the continuous one.
  Eigen::MatrixXd weighted() const {
    return collocation_sqrt_weights().asDiagonal() * raw *
           detector_sqrt_weights().cwiseInverse().asDiagonal();
  }

  /// Adjoint of raw with respect to the weighted inner products:
  /// A* = W^{-1} raw^T C.
  Eigen::VectorXcd adjoint(const Eigen::VectorXcd& p) const {
    const Eigen::VectorXd c = collocation_sqrt_weights().array().square();
    const Eigen::VectorXd w = detector_sqrt_weights().array().square();
    Eigen::VectorXcd cp = c.cast<cplx>().cwiseProduct(p);
    Eigen::VectorXcd out = raw.transpose().cast<cplx>() * cp;
    return out.cwiseQuotient(w.cast<cplx>());
  }
};

inline OperatorMatrix assemble_operator(const AcquisitionGeometry& g, double lambda) {
  g.validate();
  if (!(lambda > 0)) throw DomainError("assemble_operator: lambda must be positive");
  OperatorMatrix op;
  op.lambda = lambda;
  op.detectors = detector_points(g);
  op.collocation = boundary_collocation(g);
  const auto nd = static_cast<Eigen::Index>(op.detectors.size());
  const auto nc = static_cast<Eigen::Index>(op.collocation.size());
  op.raw.resize(2 * nc, 2 * nd);
  parallel_for(static_cast<std::size_t>(nd), [&](std::size_t kk) {
    const auto k = static_cast<Eigen::Index>(kk);
    const BoundaryPoint& z = op.detectors[kk];
    for (Eigen::Index c = 0; c < nc; ++c) {
      const BoundaryPoint& x = op.collocation[c];
      const Vec2 diff = x.position - z.position;
      const double d = norm(diff);
      if (!(d > 0)) throw GeometryError("collocation point coincides with a detector");
      const auto ker = specfun::kernels01(lambda * d);
      const double dn = dot(diff, x.normal) / d;
      op.raw(c, k) = ker.j0 * z.weight;
      op.raw(nc + c, k) = -ker.j1 * dn * z.weight;
      op.raw(c, nd + k) = ker.y0 * z.weight;
      op.raw(nc + c, nd + k) = -ker.y1 * dn * z.weight;
    }
  });
  return op;
}

/// Boundary data of exp(-i xi . x): Dirichlet values and lambda^-1 times the
/// outward normal derivative at the collocation points.
struct TraceVector {
  std::vector<cplx> dirichlet;
  std::vector<cplx> neumann_scaled;
};

inline TraceVector planewave_trace(std::span<const BoundaryPoint> collocation, Vec2 xi) {
  const double lambda = norm(xi);
  if (!(lambda > 0)) throw DomainError("planewave_trace: xi must be non-zero");
  TraceVector t;
  t.dirichlet.resize(collocation.size());
  t.neumann_scaled.resize(collocation.size());
  const Vec2 dir = (1.0 / lambda) * xi;
  for (std::size_t c = 0; c < collocation.size(); ++c) {
    const double ph = dot(xi, collocation[c].position);
    const cplx e(std::cos(ph), -std::sin(ph));
    t.dirichlet[c] = e;
    t.neumann_scaled[c] = cplx(0.0, -dot(dir, collocation[c].normal)) * e;
  }
  return t;
}

/// One regularized density pair with its bookkeeping.
struct SvdDensity {
  DensityPair rho;
  double residual = 0.0;  // weighted L2 trace misfit ||A rho - u||
  int jmax = 0;           // retained singular triples
  double norm = 0.0;      // weighted L2 norm of the pair
};

/// Singular values below this fraction of sigma_1 are never used.
inline constexpr double kRankGuard = 1e-13;

namespace detail {

/// Solves for the densities of every wave direction in `thetas` from one SVD.
/// `targets` holds the weighted traces: column s is Re u_s, column ns + s is Im u_s.
inline std::vector<SvdDensity> truncated_svd_solve(const OperatorMatrix& op, const ThinSvd& svd,
                                                   const Eigen::MatrixXd& targets, double bound) {
  const Eigen::Index ns = targets.cols() / 2;
  const Eigen::Index rank = svd.s.size();
  const auto nd = static_cast<Eigen::Index>(op.detectors.size());
  const Eigen::MatrixXd coef = svd.u.transpose() * targets;  // rank x 2ns

  Eigen::MatrixXd kept = Eigen::MatrixXd::Zero(rank, 2 * ns);
  std::vector<int> jmax(ns, 0);
  for (Eigen::Index s = 0; s < ns; ++s) {
    double acc = 0.0;
    int j = 0;
    for (; j < rank; ++j) {
      if (svd.s(j) < kRankGuard * svd.s(0)) break;
      const double c2 = coef(j, s) * coef(j, s) + coef(j, ns + s) * coef(j, ns + s);
      const double next = acc + c2 / (svd.s(j) * svd.s(j));
      if (!(std::sqrt(next) < bound)) break;  // roll back the overshooting triple
      acc = next;
      kept(j, s) = coef(j, s);
      kept(j, ns + s) = coef(j, ns + s);
    }
    jmax[s] = j;
  }
  const Eigen::MatrixXd misfit = targets - svd.u * kept;
  Eigen::MatrixXd scaled = svd.s.cwiseInverse().asDiagonal() * kept;
  const Eigen::MatrixXd rho_w = svd.v * scaled;  // orthonormal coordinates, 2nd x 2ns
  const Eigen::VectorXd inv_sqrt_w = op.detector_sqrt_weights().cwiseInverse();

  std::vector<SvdDensity> out(ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    SvdDensity& r = out[s];
    r.jmax = jmax[s];
    r.residual = std::sqrt(misfit.col(s).squaredNorm() + misfit.col(ns + s).squaredNorm());
    r.norm = std::sqrt(rho_w.col(s).squaredNorm() + rho_w.col(ns + s).squaredNorm());
    r.rho.rho_j.resize(nd);
    r.rho.rho_y.resize(nd);
    for (Eigen::Index k = 0; k < nd; ++k) {
      r.rho.rho_j[k] = cplx(rho_w(k, s), rho_w(k, ns + s)) * inv_sqrt_w(k);
      r.rho.rho_y[k] = cplx(rho_w(nd + k, s), rho_w(nd + k, ns + s)) * inv_sqrt_w(nd + k);
    }
  }
  return out;
}

inline Eigen::MatrixXd weighted_targets(const OperatorMatrix& op, double lambda, std::span<const double> thetas) {
  const auto nc = static_cast<Eigen::Index>(op.collocation.size());
  const auto ns = static_cast<Eigen::Index>(thetas.size());
  const Eigen::VectorXd sc = op.collocation_sqrt_weights();
  Eigen::MatrixXd t(2 * nc, 2 * ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    const auto tr = planewave_trace(op.collocation, polar(lambda, thetas[s]));
    for (Eigen::Index c = 0; c < nc; ++c) {
      t(c, s) = tr.dirichlet[c].real() * sc(c);
      t(c, ns + s) = tr.dirichlet[c].imag() * sc(c);
      t(nc + c, s) = tr.neumann_scaled[c].real() * sc(nc + c);
      t(nc + c, ns + s) = tr.neumann_scaled[c].imag() * sc(nc + c);
    }
  }
  return t;
}

}  // namespace detail

/// Regularized densities for every theta in `thetas` at one frequency, all
/// sharing a single SVD of the operator.
inline std::vector<SvdDensity> svd_densities(const AcquisitionGeometry& g, double lambda,
                                             std::span<const double> thetas, double K) {
  if (!(K > 1)) throw Error("regularization constant K must exceed 1");
  const OperatorMatrix op = assemble_operator(g, lambda);
  const ThinSvd svd = thin_svd(op.weighted());
  const double bound = K * norm_threshold(lambda, g.arc_radius);
  return detail::truncated_svd_solve(op, svd, detail::weighted_targets(op, lambda, thetas), bound);
}

enum class DensityMethod : std::uint16_t { svd = 1, exact_series = 2 };

/// Uniform polar grid: lambda_i = i * lambda_max / n_lambda (i = 1..n_lambda),
/// theta_j = 2 pi j / n_theta (j = 0..n_theta-1).
struct PolarGrid {
  std::vector<double> lambdas;
  int n_theta = 400;

  double theta(int j) const { return 2.0 * std::numbers::pi * j / n_theta; }

  static PolarGrid uniform(double lambda_max, int n_lambda, int n_theta) {
    if (n_lambda < 1) throw Error("polar grid needs at least one frequency");
    if (n_theta < 2 || n_theta % 2 != 0) throw Error("polar grid needs an even number of angles");
    PolarGrid p;
    p.n_theta = n_theta;
    p.lambdas.resize(n_lambda);
    for (int i = 0; i < n_lambda; ++i) p.lambdas[i] = (i + 1) * lambda_max / n_lambda;
    return p;
  }

  /// lambda_max = grid Nyquist, n_lambda = ceil(n / 2).
  static PolarGrid for_grid(const GridSpec& grid, int n_theta = 400) {
    return uniform(grid.nyquist(), (grid.n + 1) / 2, n_theta);
  }
};

/// Precomputed densities for a polar grid. Only theta in [0, pi) is stored;
/// the pair for theta + pi is the complex conjugate (the operator is real and
/// exp(-i(-xi).x) is the conjugate of exp(-i xi.x)).
class DensitySet {
public:
  AcquisitionGeometry geometry;
  DensityMethod method = DensityMethod::svd;
  double K = 1.5;
  std::vector<double> lambdas;
  int n_theta = 0;

  DensitySet() = default;
  DensitySet(const AcquisitionGeometry& g, DensityMethod m, double k, std::vector<double> lams, int nth)
      : geometry(g), method(m), K(k), lambdas(std::move(lams)), n_theta(nth) {
    if (n_theta < 2 || n_theta % 2 != 0) throw Error("DensitySet needs an even number of angles");
    const std::size_t cells = lambdas.size() * n_stored();
    data_.assign(cells * 2 * n_detectors(), cplx{});
    residuals_.assign(cells, 0.0);
    jmax_.assign(cells, 0);
  }

  std::size_t n_lambda() const { return lambdas.size(); }
  std::size_t n_stored() const { return static_cast<std::size_t>(n_theta / 2); }
  std::size_t n_detectors() const { return static_cast<std::size_t>(geometry.n_detectors); }
  double theta(std::size_t j) const { return 2.0 * std::numbers::pi * static_cast<double>(j) / n_theta; }

  std::span<cplx> rho_j(std::size_t i, std::size_t js) { return {slot(i, js, 0), n_detectors()}; }
  std::span<cplx> rho_y(std::size_t i, std::size_t js) { return {slot(i, js, 1), n_detectors()}; }
  std::span<const cplx> rho_j(std::size_t i, std::size_t js) const { return {slot(i, js, 0), n_detectors()}; }
  std::span<const cplx> rho_y(std::size_t i, std::size_t js) const { return {slot(i, js, 1), n_detectors()}; }

  double& residual(std::size_t i, std::size_t j) { return residuals_[cell(i, j % n_stored())]; }
  double residual(std::size_t i, std::size_t j) const { return residuals_[cell(i, j % n_stored())]; }
  std::int32_t& jmax(std::size_t i, std::size_t j) { return jmax_[cell(i, j % n_stored())]; }
  std::int32_t jmax(std::size_t i, std::size_t j) const { return jmax_[cell(i, j % n_stored())]; }

  /// Density pair for any theta index j in [0, n_theta).
  DensityPair pair(std::size_t i, std::size_t j) const {
    const std::size_t js = j % n_stored();
    const bool flip = j >= n_stored();
    DensityPair d;
    auto a = rho_j(i, js);
    auto b = rho_y(i, js);
    d.rho_j.assign(a.begin(), a.end());
    d.rho_y.assign(b.begin(), b.end());
    if (flip) {
      for (auto& v : d.rho_j) v = std::conj(v);
      for (auto& v : d.rho_y) v = std::conj(v);
    }
    return d;
  }

  std::vector<cplx>& raw_data() { return data_; }
  const std::vector<cplx>& raw_data() const { return data_; }
  std::vector<double>& raw_residuals() { return residuals_; }
  const std::vector<double>& raw_residuals() const { return residuals_; }
  std::vector<std::int32_t>& raw_jmax() { return jmax_; }
  const std::vector<std::int32_t>& raw_jmax() const { return jmax_; }

private:
  std::size_t cell(std::size_t i, std::size_t js) const { return i * n_stored() + js; }
  cplx* slot(std::size_t i, std::size_t js, int block) {
    return data_.data() + (cell(i, js) * 2 + block) * n_detectors();
  }
  const cplx* slot(std::size_t i, std::size_t js, int block) const {
    return data_.data() + (cell(i, js) * 2 + block) * n_detectors();
  }

  std::vector<cplx> data_;
  std::vector<double> residuals_;
  std::vector<std::int32_t> jmax_;
};

/// Called after each frequency is finished with its index.
using ProgressFn = std::function<void(std::size_t)>;

/// Builds the density set for a geometry and polar grid. Frequencies are
/// independent and processed concurrently.
inline DensitySet precompute_densities(const AcquisitionGeometry& g, const PolarGrid& grid, double K,
                                       DensityMethod method = DensityMethod::svd,
                                       const ProgressFn& progress = {}) {
  g.validate();
  if (!(K > 1)) throw Error("regularization constant K must exceed 1");
  if (method == DensityMethod::exact_series && !g.closed_arc())
    throw GeometryError("exact-series densities require a closed detector circle");
  DensitySet set(g, method, K, grid.lambdas, grid.n_theta);
  std::vector<double> thetas(set.n_stored());
  for (std::size_t j = 0; j < thetas.size(); ++j) thetas[j] = set.theta(j);
  std::mutex progress_mutex;

  parallel_for(set.n_lambda(), [&](std::size_t i) {
    const double lambda = set.lambdas[i];
    std::vector<SvdDensity> sol;
    if (method == DensityMethod::svd) {
      sol = svd_densities(g, lambda, thetas, K);
    } else {
      // Closed-form series; residual measured with the same discrete operator.
      const OperatorMatrix op = assemble_operator(g, lambda);
      const Eigen::MatrixXd targets = detail::weighted_targets(op, lambda, thetas);
      const Eigen::MatrixXd b = op.weighted();
      const Eigen::VectorXd sw = op.detector_sqrt_weights();
      const auto nd = static_cast<Eigen::Index>(g.n_detectors);
      const auto ns = static_cast<Eigen::Index>(thetas.size());
      Eigen::MatrixXd rho_w(2 * nd, 2 * ns);
      sol.resize(thetas.size());
      for (Eigen::Index s = 0; s < ns; ++s) {
        sol[s].rho = fullcircle_densities(lambda, thetas[s], g);
        sol[s].jmax = 2 * fullcircle_resolved_order(g, lambda) + 1;
        for (Eigen::Index k = 0; k < nd; ++k) {
          rho_w(k, s) = sol[s].rho.rho_j[k].real() * sw(k);
          rho_w(k, ns + s) = sol[s].rho.rho_j[k].imag() * sw(k);
          rho_w(nd + k, s) = sol[s].rho.rho_y[k].real() * sw(nd + k);
          rho_w(nd + k, ns + s) = sol[s].rho.rho_y[k].imag() * sw(nd + k);
        }
      }
      const Eigen::MatrixXd misfit = b * rho_w - targets;
      for (Eigen::Index s = 0; s < ns; ++s)
        sol[s].residual = std::sqrt(misfit.col(s).squaredNorm() + misfit.col(ns + s).squaredNorm());
    }
    for (std::size_t js = 0; js < sol.size(); ++js) {
      std::copy(sol[js].rho.rho_j.begin(), sol[js].rho.rho_j.end(), set.rho_j(i, js).begin());
      std::copy(sol[js].rho.rho_y.begin(), sol[js].rho.rho_y.end(), set.rho_y(i, js).begin());
      set.residual(i, js) = sol[js].residual;
      set.jmax(i, js) = sol[js].jmax;
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(i);
    }
  });
  return set;
}

/// Plane-wave approximation error over the grid nodes inside the ROI.
struct ResidualReport {
  double max_error = 0.0;
  double l2_error = 0.0;  // sqrt(h^2 sum |error|^2), a discrete L2(Omega) norm
};

namespace detail {

inline std::vector<Vec2> roi_nodes(const AcquisitionGeometry& g, const GridSpec& grid) {
  std::vector<Vec2> pts;
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix) {
      const Vec2 p{grid.node(ix), grid.node(iy)};
      if (inside_roi(g, p)) pts.push_back(p);
    }
  return pts;
}

}  // namespace detail

/// |W_J(x) + W_Y(x) - exp(-i xi . x)| at the given points, with the
/// potentials evaluated by direct detector quadrature.
inline std::vector<double> planewave_errors(const AcquisitionGeometry& g, const DensityPair& rho, Vec2 xi,
                                            std::span<const Vec2> points) {
  const double lambda = norm(xi);
  if (!(lambda > 0)) throw DomainError("planewave_errors: xi must be non-zero");
  const auto dets = detector_points(g);
  if (rho.rho_j.size() != dets.size() || rho.rho_y.size() != dets.size())
    throw MismatchError("density length differs from the detector count");
  std::vector<double> err(points.size());
  parallel_for(points.size(), [&](std::size_t p) {
    cplx w{};
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const double r = lambda * norm(dets[k].position - points[p]);
      const double j0 = boost::math::cyl_bessel_j(0, r, specfun::detail::Policy());
      const double y0 = boost::math::cyl_neumann(0, r, specfun::detail::Policy());
      w += dets[k].weight * (j0 * rho.rho_j[k] + y0 * rho.rho_y[k]);
    }
    const double ph = dot(xi, points[p]);
    err[p] = std::abs(w - cplx(std::cos(ph), -std::sin(ph)));
  });
  return err;
}

/// Plane-wave error over the grid nodes inside the ROI.
inline ResidualReport planewave_residual(const AcquisitionGeometry& g, const DensityPair& rho, Vec2 xi,
                                         const GridSpec& grid) {
  const auto pts = detail::roi_nodes(g, grid);
  const auto err = planewave_errors(g, rho, xi, pts);
  ResidualReport rep;
  double s2 = 0.0;
  for (double e : err) {
    rep.max_error = std::max(rep.max_error, e);
    s2 += e * e;
  }
  rep.l2_error = std::sqrt(s2) * grid.step();
  return rep;
}

/// Residuals for every stored direction of frequency index i at once (the
/// pair for theta + pi has the same error). Returns one report per stored theta.
inline std::vector<ResidualReport> planewave_residuals(const DensitySet& set, std::size_t i, const GridSpec& grid) {
  const double lambda = set.lambdas.at(i);
  const auto dets = detector_points(set.geometry);
  const auto pts = detail::roi_nodes(set.geometry, grid);
  const auto nd = static_cast<Eigen::Index>(dets.size());
  const auto ns = static_cast<Eigen::Index>(set.n_stored());

  Eigen::MatrixXd rho_re(2 * nd, ns), rho_im(2 * nd, ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    auto a = set.rho_j(i, s);
    auto b = set.rho_y(i, s);
    for (Eigen::Index k = 0; k < nd; ++k) {
      rho_re(k, s) = a[k].real() * dets[k].weight;
      rho_im(k, s) = a[k].imag() * dets[k].weight;
      rho_re(nd + k, s) = b[k].real() * dets[k].weight;
      rho_im(nd + k, s) = b[k].imag() * dets[k].weight;
    }
  }
  std::vector<Vec2> dirs(ns);
  for (Eigen::Index s = 0; s < ns; ++s) dirs[s] = polar(lambda, set.theta(s));

  constexpr std::size_t block = 512;
  const std::size_t n_blocks = (pts.size() + block - 1) / block;
  std::vector<std::vector<double>> max_err(n_blocks, std::vector<double>(ns, 0.0));
  std::vector<std::vector<double>> sum2(n_blocks, std::vector<double>(ns, 0.0));
  parallel_for(n_blocks, [&](std::size_t b) {
    const std::size_t p0 = b * block;
    const auto np = static_cast<Eigen::Index>(std::min(block, pts.size() - p0));
    Eigen::MatrixXd kern(np, 2 * nd);
    for (Eigen::Index p = 0; p < np; ++p)
      for (Eigen::Index k = 0; k < nd; ++k) {
        const double r = lambda * norm(dets[k].position - pts[p0 + p]);
        kern(p, k) = boost::math::cyl_bessel_j(0, r, specfun::detail::Policy());
        kern(p, nd + k) = boost::math::cyl_neumann(0, r, specfun::detail::Policy());
      }
    const Eigen::MatrixXd w_re = kern * rho_re;
    const Eigen::MatrixXd w_im = kern * rho_im;
    for (Eigen::Index s = 0; s < ns; ++s)
      for (Eigen::Index p = 0; p < np; ++p) {
        const double ph = dot(dirs[s], pts[p0 + p]);
        const double e = std::hypot(w_re(p, s) - std::cos(ph), w_im(p, s) + std::sin(ph));
        max_err[b][s] = std::max(max_err[b][s], e);
        sum2[b][s] += e * e;
      }
  });
  std::vector<ResidualReport> out(ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    double s2 = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      out[s].max_error = std::max(out[s].max_error, max_err[b][s]);
      s2 += sum2[b][s];
    }
    out[s].l2_error = std::sqrt(s2) * grid.step();
  }
  return out;
}

}  // namespace tato
