#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhif/fusion.hpp"
#include "dhif/model.hpp"
#include "dhif/weights.hpp"

namespace dhif {

/// Per-agent prior carried between steps. The information matrix may be
/// singular (zero encodes the uninformative prior); mean components in its
/// null space are carried forward unchanged by updates.
struct AgentBelief {
  Eigen::VectorXd mean;  // x_{i,k|k-1}
  Eigen::MatrixXd info;  // Xi_{i,k} = P_{i,k|k-1}^-1, PSD
};

/// What one agent broadcasts per step: measurement information
/// (S = H^T R^-1 H, y = H^T R^-1 z) and its prior in information form.
struct BroadcastMessage {
  Eigen::MatrixXd S;
  Eigen::VectorXd y;
  Eigen::MatrixXd Xi;
  Eigen::VectorXd xi;
};

enum class Algorithm { Dhif, Kla, Icf, Kcf, Ckf };
enum class WeightMode { Optimal, Fast, Uniform };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);
std::string weight_mode_name(WeightMode m);
WeightMode weight_mode_from_name(const std::string& name);

struct FilterConfig {
  Algorithm algorithm = Algorithm::Dhif;
  WeightMode weight_mode = WeightMode::Optimal;  // DHIF only
  double epsilon = 0.0;            // ICF/KCF consensus rate, in (0, 1/max in-degree)
  std::optional<double> delta;     // KCF gain; empty selects eps/(1 + tr(P))
  int n_hint = 0;                  // ICF's required network-size knowledge
  std::string label;               // CSV identity; defaults to the algorithm name

  std::string effective_label() const {
    return label.empty() ? algorithm_name(algorithm) : label;
  }
  void validate(const NetworkGraph& graph) const;
};

/// Posterior of one agent after an update: information form plus the
/// covariance when it exists.
struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd info;       // S-bar + Xi-bar (or the algorithm's analogue)
  Eigen::MatrixXd cov;        // pseudo-inverse of info
  bool cov_valid = false;     // info positive definite
};

/// Builds the broadcast for one agent. `z` must be present exactly for
/// observing sensors.
BroadcastMessage make_message(const AgentBelief& belief, const SensorModel& sensor,
                              const std::optional<Eigen::VectorXd>& z);

/// DHIF correction: info = sum_{j in J_i} w_ij Xi_j + sum_{j in J_i} S_j.
/// `weights_per_agent[i]` is indexed like graph.inclusive_neighbors(i) and
/// must lie on the simplex with positive entries.
std::vector<Posterior> dhif_update(const std::vector<AgentBelief>& beliefs,
                                   const std::vector<BroadcastMessage>& msgs,
                                   const NetworkGraph& graph,
                                   const std::vector<Eigen::VectorXd>& weights_per_agent);

/// KLA correction: info = sum_{j in J_i} sigma_ij (Xi_j + S_j).
std::vector<Posterior> kla_update(const std::vector<AgentBelief>& beliefs,
                                  const std::vector<BroadcastMessage>& msgs,
                                  const NetworkGraph& graph,
                                  const std::vector<Eigen::VectorXd>& sigma_per_agent);

/// ICF single-consensus-step correction:
/// info = sum sigma_ij Xi_j + N * sum sigma_ij S_j with the consensus
/// stencil sigma_ij = eps (neighbors), sigma_ii = 1 - eps * in-degree.
std::vector<Posterior> icf_update(const std::vector<AgentBelief>& beliefs,
                                  const std::vector<BroadcastMessage>& msgs,
                                  const NetworkGraph& graph, const FilterConfig& cfg);

/// KCF: local information-filter covariance update plus an equally
/// weighted consensus pull toward neighbor prior means. Requires positive
/// definite priors.
std::vector<Posterior> kcf_update(const std::vector<AgentBelief>& beliefs,
                                  const std::vector<BroadcastMessage>& msgs,
                                  const NetworkGraph& graph, const FilterConfig& cfg);

/// Centralized benchmark: one belief, all measurement messages summed.
Posterior ckf_update(const AgentBelief& belief,
                     const std::vector<BroadcastMessage>& msgs);

/// sigma_ij = 1 / |J_i| for every inclusive neighbor.
std::vector<Eigen::VectorXd> kla_uniform_sigma(const NetworkGraph& graph);

/// Time update. A positive definite posterior goes through
/// P' = F P F^T + B Q B^T; a singular one through the information-form
/// identity, which requires F nonsingular.
AgentBelief dhif_predict(const Eigen::VectorXd& mean, const Eigen::MatrixXd& info,
                         const ProcessModel& model);

/// Covariance-form prediction (dual path of dhif_predict).
Estimate predict_covariance(const Estimate& posterior, const ProcessModel& model);

/// Running state of one configured filter across steps.
struct FilterState {
  std::vector<AgentBelief> beliefs;          // size N (CKF: size 1)
  std::vector<Eigen::VectorXd> last_weights; // DHIF warm starts, may be empty
};

/// Posterior snapshot of a whole step, per agent (CKF replicates its single
/// estimate across agents so downstream aggregation is uniform).
struct StepOutput {
  std::vector<Posterior> posteriors;
  std::vector<Eigen::VectorXd> weights_used;  // DHIF only, per agent over J_i
};

FilterState make_initial_state(const FilterConfig& cfg, const NetworkGraph& graph,
                               const std::vector<AgentBelief>& initial_beliefs);

/// One full Algorithm-1 cycle: message construction, weight selection,
/// update, prediction. `measurements[i]` must be present exactly for
/// observing sensors. The update is a two-phase exchange over a snapshot,
/// so results do not depend on agent ordering.
StepOutput run_filter_step(const FilterConfig& cfg, FilterState& state,
                           const std::vector<std::optional<Eigen::VectorXd>>& measurements,
                           const NetworkGraph& graph, const ProcessModel& model,
                           const std::vector<SensorModel>& sensors);

}  // namespace dhif
