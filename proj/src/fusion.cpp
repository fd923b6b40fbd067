#include "dhif/fusion.hpp"

#include <cmath>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"

namespace dhif {
namespace {

void check_source(const LinearSource& s, int n) {
  if (s.C.cols() != n) {
    throw InvalidInputError("fusion: all sources must map the same parameter");
  }
  if (s.R.rows() != s.C.rows() || s.R.cols() != s.C.rows() ||
      s.a.size() != s.C.rows()) {
    throw InvalidInputError("fusion: source dimensions are inconsistent");
  }
}

Estimate fuse_weighted(const std::vector<LinearSource>& sources,
                       const std::vector<double>* weights) {
  if (sources.empty()) throw InvalidInputError("fusion: no sources given");
  const int n = static_cast<int>(sources.front().C.cols());
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd vec = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const LinearSource& s = sources[i];
    check_source(s, n);
    const double w = weights ? (*weights)[i] : 1.0;
    const Eigen::MatrixXd r_inv = linalg::pd_inverse(s.R);
    info += w * s.C.transpose() * r_inv * s.C;
    vec += w * s.C.transpose() * r_inv * s.a;
  }
  Eigen::MatrixXd cov;
  try {
    cov = linalg::pd_inverse(info);
  } catch (const NotIdentifiableError&) {
    throw NotIdentifiableError(
        "fusion: information sum is singular; parameter not identifiable");
  }
  return Estimate{cov * vec, cov};
}

}  // namespace

Estimate fuse_uncorrelated(const std::vector<LinearSource>& sources) {
  return fuse_weighted(sources, nullptr);
}

Estimate fuse_ci(const std::vector<LinearSource>& sources,
                 const std::vector<double>& weights) {
  if (weights.size() != sources.size()) {
    throw InvalidInputError("fuse_ci: one weight per source required");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInputError("fuse_ci: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InvalidInputError("fuse_ci: weights must sum to one");
  }
  return fuse_weighted(sources, &weights);
}

InformationPair to_information(const Estimate& e) {
  if (e.cov.rows() != e.cov.cols() || e.mean.size() != e.cov.rows()) {
    throw InvalidInputError("to_information: inconsistent dimensions");
  }
  Eigen::MatrixXd xi_mat;
  try {
    xi_mat = linalg::pd_inverse(e.cov);
  } catch (const NotIdentifiableError&) {
    throw PreconditionError("to_information: covariance must be positive definite");
  }
  return InformationPair{xi_mat, xi_mat * e.mean};
}

Estimate from_information(const InformationPair& p) {
  if (p.Xi.rows() != p.Xi.cols() || p.xi.size() != p.Xi.rows()) {
    throw InvalidInputError("from_information: inconsistent dimensions");
  }
  Eigen::MatrixXd cov;
  try {
    cov = linalg::pd_inverse(p.Xi);
  } catch (const NotIdentifiableError&) {
    throw InfiniteUncertaintyError(
        "from_information: information matrix is singular; keep information form");
  }
  return Estimate{cov * p.xi, cov};
}

}  // namespace dhif
