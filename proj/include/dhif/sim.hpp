#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhif/filters.hpp"
#include "dhif/model.hpp"

namespace dhif {

/// Declarative experiment description.
struct Scenario {
  ProcessModel process;
  std::vector<SensorModel> sensors;  // one per agent
  NetworkGraph graph;
  int horizon = 1;       // steps K
  int trials = 1;        // Monte Carlo trials T
  std::uint64_t seed = 0;
  std::vector<FilterConfig> algorithms;
  Eigen::VectorXd initial_state;        // x_1
  std::vector<AgentBelief> initial_beliefs;  // empty: zero-information priors

  /// Beliefs with the defaults filled in (zero mean, zero information).
  std::vector<AgentBelief> resolved_initial_beliefs() const;

  void validate() const;
};

/// Everything recorded about one (trial, algorithm, step, agent) cell.
/// sigma/trace/nees are NaN while the posterior is held in singular
/// information form.
struct RecordCell {
  Eigen::VectorXd error;  // estimate - truth
  Eigen::VectorXd sigma;  // per-component standard deviations
  double trace = 0.0;
  double nees = 0.0;
};

/// Per-trial result table, indexed [algorithm][step][agent].
struct TrialRecord {
  int trial_index = 0;
  std::uint64_t noise_checksum = 0;
  std::vector<std::string> algorithm_labels;
  std::vector<std::vector<std::vector<RecordCell>>> cells;

  const RecordCell& at(int algorithm, int step, int agent) const {
    return cells.at(algorithm).at(step).at(agent);
  }
  int algorithm_index(const std::string& label) const;
};

/// Simulates one trial: a common truth/measurement realization consumed by
/// every configured algorithm. Bit-deterministic in (scenario.seed,
/// trial_index).
TrialRecord run_trial(const Scenario& s, int trial_index);

/// Runs `scenario.trials` independent trials and hands each TrialRecord to
/// `sink` in trial order. Trials are computed in parallel; delivery order
/// (and therefore any floating-point aggregation downstream) is fixed.
void run_monte_carlo(const Scenario& s,
                     const std::function<void(const TrialRecord&)>& sink,
                     int threads = 0);

/// Convenience collector for small runs.
std::vector<TrialRecord> run_monte_carlo_collect(const Scenario& s, int threads = 0);

/// psi_k = sqrt(mean over trials of mean over agents of squared error) for
/// one state component. Throws IncompleteDataError when the records do not
/// cover a full (trial x agent) grid.
std::vector<double> compute_rmse(const std::vector<TrialRecord>& records,
                                 const std::string& algorithm_label, int component);

struct NeesPoint {
  double mean_nees = 0.0;  // over trials with finite NEES
  double chi2_lo = 0.0;    // two-sided 95% band, scaled to the per-trial mean
  double chi2_hi = 0.0;
  int excluded = 0;        // trials with singular covariance at this cell
};

/// Mean NEES per step for one agent plus the 95% chi-square acceptance
/// band for the effective trial count.
std::vector<NeesPoint> compute_nees_statistic(const std::vector<TrialRecord>& records,
                                              const std::string& algorithm_label,
                                              int agent, int state_dim);

/// |error| and 3 sigma series of a single trial, for one agent/component.
struct BoundSeries {
  std::vector<double> abs_error;
  std::vector<double> bound;  // 3 * sqrt(P[c,c]); NaN when P is singular
};
BoundSeries compute_3sigma_bounds(const TrialRecord& record,
                                  const std::string& algorithm_label, int agent,
                                  int component);

/// Incremental aggregators, used to stream large runs.
class RmseAccumulator {
 public:
  explicit RmseAccumulator(const Scenario& s);
  void consume(const TrialRecord& r);
  /// [algorithm][component][k]
  std::vector<std::vector<std::vector<double>>> finish() const;

 private:
  int horizon_, agents_, dim_, trials_seen_ = 0;
  std::vector<std::vector<std::vector<double>>> sums_;
};

class NeesAccumulator {
 public:
  explicit NeesAccumulator(const Scenario& s);
  void consume(const TrialRecord& r);
  /// [algorithm][agent][k]
  std::vector<std::vector<std::vector<NeesPoint>>> finish() const;

 private:
  int horizon_, agents_, dim_, total_trials_ = 0;
  std::vector<std::vector<std::vector<double>>> sums_;
  std::vector<std::vector<std::vector<int>>> counts_;
};

}  // namespace dhif
