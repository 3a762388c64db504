#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#ifdef WESPER_USE_LAPACKE
#include <lapacke.h>
#endif

namespace wesper::detail {

// Symmetric eigenvalues, ascending. Only the lower triangle of `a` is read;
// `a` is destroyed.
inline Eigen::VectorXd symmetric_eigenvalues(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
#ifdef WESPER_USE_LAPACKE
  Eigen::VectorXd evals(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, evals.data());
  if (info != 0) throw std::runtime_error("dsyevd failed to converge");
  return evals;
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.selfadjointView<Eigen::Lower>(),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolve failed");
  return es.eigenvalues();
#endif
}

// Full decomposition; eigenvalues ascending, eigenvectors in columns.
inline void symmetric_eigen(Eigen::MatrixXd a, Eigen::VectorXd& evals,
                            Eigen::MatrixXd& evecs) {
  const int n = static_cast<int>(a.rows());
#ifdef WESPER_USE_LAPACKE
  evals.resize(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, evals.data());
  if (info != 0) throw std::runtime_error("dsyevd failed to converge");
  evecs = std::move(a);
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.selfadjointView<Eigen::Lower>());
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolve failed");
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
#endif
}

}  // namespace wesper::detail
