#pragma once

#include <vector>

#include <Eigen/Dense>

namespace dhif {

/// A state estimate in covariance form.
struct Estimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetric positive definite
};

/// The same belief in information form: Xi = P^-1, xi = P^-1 x. Zero Xi
/// encodes infinite uncertainty, which is how naive agents and
/// uninformative priors are represented.
struct InformationPair {
  Eigen::MatrixXd Xi;
  Eigen::VectorXd xi;
};

/// One information source: a value `a` with E[a] = C * alpha and a
/// consistent error covariance R.
struct LinearSource {
  Eigen::MatrixXd C;  // m x n
  Eigen::MatrixXd R;  // m x m, symmetric positive definite
  Eigen::VectorXd a;  // m
};

/// Trace-optimal unbiased fusion of sources with mutually uncorrelated
/// errors:
///   R_u = (sum C_i^T R_i^-1 C_i)^-1,  alpha = R_u * sum C_i^T R_i^-1 a_i
Estimate fuse_uncorrelated(const std::vector<LinearSource>& sources);

/// Covariance intersection for sources with unknown correlations; weights
/// must be positive and sum to one (within 1e-12):
///   R_c = (sum w_i C_i^T R_i^-1 C_i)^-1
Estimate fuse_ci(const std::vector<LinearSource>& sources,
                 const std::vector<double>& weights);

InformationPair to_information(const Estimate& e);
Estimate from_information(const InformationPair& p);

}  // namespace dhif
