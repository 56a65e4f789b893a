#pragma once

#include <algorithm>
#include <string>

#include <Eigen/Dense>
#include <lapacke.h>

#include "tato/error.hpp"

namespace tato {

/// Economy SVD a = u * diag(s) * v^T with s in nonincreasing order.
struct ThinSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
};

/// LAPACK dgesdd, falling back to dgesvd when divide-and-conquer fails to converge.
inline ThinSvd thin_svd(const Eigen::MatrixXd& a) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  ThinSvd out;
  out.u.resize(m, k);
  out.s.resize(k);
  Eigen::MatrixXd vt(k, n);
  Eigen::MatrixXd work = a;
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m, out.s.data(),
                                   out.u.data(), m, vt.data(), k);
  if (info > 0) {
    work = a;
    Eigen::VectorXd superb(std::max<lapack_int>(1, k - 1));
    info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, work.data(), m, out.s.data(),
                          out.u.data(), m, vt.data(), k, superb.data());
  }
  if (info != 0) throw Error("SVD failed, LAPACK info = " + std::to_string(info));
  out.v = vt.transpose();
  return out;
}

}  // namespace tato
