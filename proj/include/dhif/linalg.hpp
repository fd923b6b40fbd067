#pragma once

#include <Eigen/Dense>

namespace dhif::linalg {

/// (X + X^T)/2. Applied after every inverse so PSD invariants survive
/// floating point.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& x);

/// Eigendecomposition-based summary of a symmetric PSD matrix.
struct SymmetricInverse {
  Eigen::MatrixXd pinv;        // Moore-Penrose pseudo-inverse
  int rank = 0;
  bool positive_definite = false;
  double max_eigenvalue = 0.0;
  double min_eigenvalue = 0.0;
};

/// Pseudo-inverse of a symmetric PSD matrix. Eigenvalues below
/// rel_tol * max_eigenvalue are treated as exact zeros; the matrix is
/// reported positive definite only when no eigenvalue is dropped.
SymmetricInverse sym_pseudo_inverse(const Eigen::MatrixXd& m,
                                    double rel_tol = 1e-12);

/// Inverse of a symmetric positive definite matrix with a condition-number
/// guard of 1e12. Throws NotIdentifiableError past the guard.
Eigen::MatrixXd pd_inverse(const Eigen::MatrixXd& m);

/// Numerical rank from singular values: sigma < sigma_max * n * tol_scale
/// counts as zero.
int numerical_rank(const Eigen::MatrixXd& m, double tol_scale = 1e-10);

double min_eigenvalue(const Eigen::MatrixXd& sym);

/// min eigenvalue >= -tol * max(1, |max eigenvalue|)
bool is_psd(const Eigen::MatrixXd& m, double tol = 1e-9);

bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-9);

/// Lower Cholesky factor; throws PreconditionError if not PD.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m);

/// Throws NumericFaultError if any entry is NaN or infinite.
void require_finite(const Eigen::MatrixXd& m, const char* what);
void require_finite(const Eigen::VectorXd& v, const char* what);

}  // namespace dhif::linalg
