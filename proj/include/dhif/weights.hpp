#pragma once

#include <vector>

#include <Eigen/Dense>

namespace dhif {

/// CI weight selection over the inclusive neighborhood: minimize
/// tr((sum_j w_j Xi_j)^-1) on the simplex with per-component lower bounds.
struct WeightProblem {
  std::vector<Eigen::MatrixXd> infos;  // PSD information matrices, one per source
  double lower_bound = 0.0;            // in (0, 1/|infos|)

  void validate() const;
};

/// 1e-3 / source_count: small enough to leave the optimum unconstrained,
/// positive as the CI weights require.
double default_weight_lower_bound(int source_count);

struct WeightResult {
  Eigen::VectorXd weights;   // on the simplex, every entry >= lower bound
  double objective = 0.0;    // tr(S^-1); +inf when S is singular
  bool degenerate = false;   // weighted sum singular for every feasible w
};

/// Projected-gradient solve of the weight problem. `warm_start` (same
/// length as infos) seeds the iteration when provided.
WeightResult optimize_ci_weights(const WeightProblem& p,
                                 const Eigen::VectorXd* warm_start = nullptr);

/// Exhaustive search over the simplex lattice with `resolution` steps;
/// supports at most 4 sources.
WeightResult brute_force_weights(const WeightProblem& p, int resolution);

/// Closed-form heuristic: w_j proportional to tr(Xi_j), clipped to the
/// lower bound and renormalized.
WeightResult fast_ci_weights(const WeightProblem& p);

/// Euclidean projection onto {w : sum w = 1, w_j >= lb}.
Eigen::VectorXd project_simplex_lower_bounded(const Eigen::VectorXd& v, double lb);

}  // namespace dhif
