#pragma once

namespace dhif::stats {

/// Quantile of the standard normal distribution.
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

/// Quantile of the chi-square distribution with `dof` degrees of freedom
/// (dof need not be integral). Inverts P(dof/2, x/2) by Newton iteration.
double chi_squared_quantile(double p, double dof);

}  // namespace dhif::stats
