#include "dhif/linalg.hpp"

#include <cmath>
#include <string>

#include "dhif/errors.hpp"

namespace dhif::linalg {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& x) {
  return 0.5 * (x + x.transpose());
}

SymmetricInverse sym_pseudo_inverse(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) {
    throw InvalidInputError("sym_pseudo_inverse: matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  if (eig.info() != Eigen::Success) {
    throw NumericFaultError("sym_pseudo_inverse: eigendecomposition failed");
  }
  const Eigen::VectorXd& vals = eig.eigenvalues();
  SymmetricInverse out;
  out.max_eigenvalue = vals.size() ? vals.maxCoeff() : 0.0;
  out.min_eigenvalue = vals.size() ? vals.minCoeff() : 0.0;
  const double cutoff = std::max(out.max_eigenvalue, 0.0) * rel_tol;

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) > cutoff && vals(i) > 0.0) {
      inv(i) = 1.0 / vals(i);
      ++out.rank;
    }
  }
  out.positive_definite = (out.rank == vals.size()) && vals.size() > 0;
  out.pinv = symmetrize(eig.eigenvectors() * inv.asDiagonal() *
                        eig.eigenvectors().transpose());
  return out;
}

Eigen::MatrixXd pd_inverse(const Eigen::MatrixXd& m) {
  constexpr double kCondGuard = 1e12;
  const SymmetricInverse si = sym_pseudo_inverse(m, 1.0 / kCondGuard);
  if (!si.positive_definite) {
    throw NotIdentifiableError(
        "pd_inverse: matrix is singular or conditioned worse than 1e12");
  }
  return si.pinv;
}

int numerical_rank(const Eigen::MatrixXd& m, double tol_scale) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff =
      sv(0) * static_cast<double>(std::max(m.rows(), m.cols())) * tol_scale;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(sym));
  return eig.eigenvalues().minCoeff();
}

bool is_psd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (!is_symmetric(m, tol)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  const double hi = eig.eigenvalues().maxCoeff();
  return eig.eigenvalues().minCoeff() >= -tol * std::max(1.0, std::abs(hi));
}

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) {
    throw PreconditionError("cholesky_lower: matrix is not positive definite");
  }
  return llt.matrixL();
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericFaultError(std::string("non-finite values in ") + what);
  }
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw NumericFaultError(std::string("non-finite values in ") + what);
  }
}

}  // namespace dhif::linalg
