#pragma once

#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dhif/rng.hpp"

namespace dhif {

/// Linear time-invariant process x' = F x + B w, w ~ N(0, Q).
struct ProcessModel {
  Eigen::MatrixXd F;  // n x n state transition
  Eigen::MatrixXd B;  // n x p noise input, full column rank
  Eigen::MatrixXd Q;  // p x p process noise covariance, PD

  int n() const { return static_cast<int>(F.rows()); }
  int p() const { return static_cast<int>(Q.rows()); }

  /// B Q B^T
  Eigen::MatrixXd process_noise_covariance() const;

  /// Throws InvalidInputError when dimensions or definiteness are off.
  void validate() const;
};

/// Local sensing model z = H x + v, v ~ N(0, R). A non-observing agent
/// carries an empty H (zero rows) and contributes zero information.
struct SensorModel {
  Eigen::MatrixXd H;      // m x n observation matrix (m == 0: not observing)
  Eigen::MatrixXd R_inv;  // m x m measurement noise information, PSD

  int m() const { return static_cast<int>(H.rows()); }
  bool observing() const { return m() > 0; }

  /// Makes a sensor that never observes the target (m == 0 for state dim n).
  static SensorModel none(int n);

  void validate(int n) const;
};

/// Directed communication topology. An edge (i, j) means j receives from i.
/// Agent ids are 0-based internally.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(int agent_count, std::vector<std::pair<int, int>> edges);

  int agent_count() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  /// in-neighborhood N_i (senders to i), sorted, i excluded
  const std::vector<int>& in_neighbors(int i) const;
  /// out-neighborhood (receivers from i), sorted
  const std::vector<int>& out_neighbors(int i) const;
  /// inclusive neighborhood J_i = N_i + {i}, sorted
  std::vector<int> inclusive_neighbors(int i) const;

  int in_degree(int i) const { return static_cast<int>(in_neighbors(i).size()); }
  int max_in_degree() const;

  bool has_edge(int from, int to) const;

  /// a new graph without the given edge
  NetworkGraph without_edge(int from, int to) const;

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

/// One step of Eq. "x' = F x + B w" with w drawn from rng.
Eigen::VectorXd propagate_state(const ProcessModel& model,
                                const Eigen::VectorXd& x, Rng& rng);

/// One measurement z = H x + v. The sensor must be strictly observing
/// (R_inv positive definite); non-observing sensors never synthesize
/// measurements.
Eigen::VectorXd measure(const SensorModel& sensor, const Eigen::VectorXd& x,
                        Rng& rng);

/// Rank test of the stacked observability matrix col{H F^k}, k = 0..n-1.
bool is_observable(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H_stack);

/// Stacks the observation matrices of the given agents (empty blocks are
/// skipped). Returns a 0 x n matrix when nothing is observing.
Eigen::MatrixXd stack_observations(const std::vector<SensorModel>& sensors,
                                   const std::vector<int>& agents, int n);

/// Agents whose inclusive neighborhood lacks joint observability.
std::set<int> naive_set(const NetworkGraph& graph,
                        const std::vector<SensorModel>& sensors,
                        const Eigen::MatrixXd& F);

/// Tarjan strongly connected components, each sorted ascending; the
/// component list is in reverse topological order of the condensation.
std::vector<std::vector<int>> strongly_connected_components(
    const NetworkGraph& graph);

/// Sufficient boundedness condition: some strongly connected subgraph with
/// joint observability has a directed path to the agent (or contains it).
/// Each SCC is tested as-is and augmented with all of its ancestors.
/// Requires a nonsingular F.
bool check_boundedness_condition(const NetworkGraph& graph,
                                 const std::vector<SensorModel>& sensors,
                                 const Eigen::MatrixXd& F, int agent);

/// Per-agent verdicts of check_boundedness_condition in one sweep.
std::vector<bool> boundedness_report(const NetworkGraph& graph,
                                     const std::vector<SensorModel>& sensors,
                                     const Eigen::MatrixXd& F);

}  // namespace dhif
