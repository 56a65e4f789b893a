#pragma once

// Bessel functions of the first and second kind of integer order.
//
// Thin contract layer over Boost.Math: argument checking, the reflection
// J_{-n} = (-1)^n J_n left to callers, and a few derived quantities used by
// the layer-potential kernels (|H_n^(1)|^2, the order-0/1 kernel quadruple,
// order sequences for the full-circle series).

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "tato/error.hpp"

namespace tato::specfun {

namespace detail {

using Policy = boost::math::policies::policy<
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::promote_double<false>>;

inline void check_order(int n) {
  if (n < 0) throw DomainError("Bessel order must be non-negative");
}

}  // namespace detail

/// J_n(x). Negative x is handled by parity; non-finite x is a domain error.
inline double bessel_j(int n, double x) {
  detail::check_order(n);
  if (!std::isfinite(x)) throw DomainError("bessel_j: argument is not finite");
  if (x < 0) {
    const double v = bessel_j(n, -x);
    return (n % 2 == 0) ? v : -v;
  }
  return boost::math::cyl_bessel_j(n, x, detail::Policy());
}

/// Y_n(x), x > 0. Returns -inf once the value overflows.
inline double bessel_y(int n, double x) {
  detail::check_order(n);
  if (!std::isfinite(x) || x <= 0) throw DomainError("bessel_y: argument must be finite and positive");
  const double v = boost::math::cyl_neumann(n, x, detail::Policy());
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

/// |H_n^(1)(x)|^2 = J_n(x)^2 + Y_n(x)^2 for x > 0.
inline double hankel1_abs2(int n, double x) {
  const double j = bessel_j(n, x);
  const double y = bessel_y(n, x);
  return j * j + y * y;
}

/// J0, Y0, J1, Y1 at one argument: the kernels of the single layer
/// potentials and of their normal derivatives.
struct Kernels01 {
  double j0, y0, j1, y1;
};

inline Kernels01 kernels01(double x) {
  if (!std::isfinite(x) || x <= 0) throw DomainError("kernels01: argument must be finite and positive");
  const detail::Policy pol;
  return {boost::math::cyl_bessel_j(0, x, pol), boost::math::cyl_neumann(0, x, pol),
          boost::math::cyl_bessel_j(1, x, pol), boost::math::cyl_neumann(1, x, pol)};
}

/// J_n(x) and Y_n(x) for n = 0..n_max at a fixed x > 0.
struct OrderSequence {
  std::vector<double> j;
  std::vector<double> y;
};

inline OrderSequence bessel_sequence(int n_max, double x) {
  detail::check_order(n_max);
  if (!std::isfinite(x) || x <= 0) throw DomainError("bessel_sequence: argument must be finite and positive");
  OrderSequence seq;
  seq.j.resize(n_max + 1);
  seq.y.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) seq.j[n] = bessel_j(n, x);
  // Forward recurrence is stable for Y.
  seq.y[0] = bessel_y(0, x);
  if (n_max >= 1) seq.y[1] = bessel_y(1, x);
  constexpr double huge = 1e300;
  for (int n = 1; n < n_max; ++n) {
    if (!std::isfinite(seq.y[n]) || std::abs(seq.y[n]) > huge) {
      seq.y[n + 1] = -std::numeric_limits<double>::infinity();
      continue;
    }
    seq.y[n + 1] = (2.0 * n / x) * seq.y[n] - seq.y[n - 1];
  }
  return seq;
}

}  // namespace tato::specfun
