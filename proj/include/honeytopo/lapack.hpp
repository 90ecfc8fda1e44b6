#pragma once

// Thin wrappers over LAPACK zgeev for dense complex non-Hermitian matrices.

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Dense>
#include <string>

#include "honeytopo/params.hpp"

namespace honeytopo::lapack {

struct EigenSystem {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd right;  ///< columns: A r = lambda r
  Eigen::MatrixXcd left;   ///< columns: l^H A = lambda l^H
};

/// Full eigensystem. The input is copied; LAPACK overwrites its argument.
inline EigenSystem eig(const Eigen::MatrixXcd& A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  if (A.rows() != A.cols()) throw EigenError("eig: matrix is not square");
  EigenSystem es{Eigen::VectorXcd(n), Eigen::MatrixXcd(n, n), Eigen::MatrixXcd(n, n)};
  if (n == 0) return es;
  Eigen::MatrixXcd work = A;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'V', 'V', n, work.data(), n, es.values.data(),
                                        es.left.data(), n, es.right.data(), n);
  if (info != 0) throw EigenError("zgeev failed with info = " + std::to_string(info));
  return es;
}

inline Eigen::VectorXcd eigenvalues(Eigen::MatrixXcd A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  if (A.rows() != A.cols()) throw EigenError("eigenvalues: matrix is not square");
  Eigen::VectorXcd w(n);
  if (n == 0) return w;
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, A.data(), n, w.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw EigenError("zgeev failed with info = " + std::to_string(info));
  return w;
}

}  // namespace honeytopo::lapack
