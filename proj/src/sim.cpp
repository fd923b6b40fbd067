#include "dhif/sim.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"
#include "dhif/rng.hpp"
#include "dhif/stats.hpp"

namespace dhif {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TruthTable {
  std::vector<Eigen::VectorXd> states;  // x_k, k = 0..K-1
  std::vector<std::vector<std::optional<Eigen::VectorXd>>> measurements;
  std::uint64_t checksum = 0;
};

// One realization of the truth path and every agent's measurements; all
// algorithms in the trial consume this single table (common random numbers).
TruthTable simulate_truth(const Scenario& s, Rng& rng) {
  TruthTable t;
  StreamChecksum sum;
  const int agents = s.graph.agent_count();
  std::vector<Eigen::MatrixXd> chol_r(agents);
  for (int i = 0; i < agents; ++i) {
    if (s.sensors[i].observing()) {
      chol_r[i] = linalg::cholesky_lower(linalg::pd_inverse(s.sensors[i].R_inv));
    }
  }
  const Eigen::MatrixXd chol_q = linalg::cholesky_lower(s.process.Q);

  Eigen::VectorXd x = s.initial_state;
  for (int k = 0; k < s.horizon; ++k) {
    t.states.push_back(x);
    sum.add(x);
    std::vector<std::optional<Eigen::VectorXd>> zs(agents);
    for (int i = 0; i < agents; ++i) {
      if (!s.sensors[i].observing()) continue;
      Eigen::VectorXd z =
          s.sensors[i].H * x + rng.gaussian_with_cholesky(chol_r[i]);
      sum.add(z);
      zs[i] = std::move(z);
    }
    t.measurements.push_back(std::move(zs));
    x = s.process.F * x + s.process.B * rng.gaussian_with_cholesky(chol_q);
  }
  t.checksum = sum.value();
  return t;
}

RecordCell make_cell(const Posterior& post, const Eigen::VectorXd& truth) {
  RecordCell cell;
  cell.error = post.mean - truth;
  const int n = static_cast<int>(truth.size());
  if (post.cov_valid) {
    cell.sigma = post.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    cell.trace = post.cov.trace();
    cell.nees = cell.error.dot(post.info * cell.error);
  } else {
    cell.sigma = Eigen::VectorXd::Constant(n, kNaN);
    cell.trace = kNaN;
    cell.nees = kNaN;
  }
  return cell;
}

}  // namespace

std::vector<AgentBelief> Scenario::resolved_initial_beliefs() const {
  if (!initial_beliefs.empty()) return initial_beliefs;
  const int n = process.n();
  std::vector<AgentBelief> beliefs(graph.agent_count());
  for (auto& b : beliefs) {
    b.mean = Eigen::VectorXd::Zero(n);
    b.info = Eigen::MatrixXd::Zero(n, n);
  }
  return beliefs;
}

void Scenario::validate() const {
  process.validate();
  const int agents = graph.agent_count();
  if (static_cast<int>(sensors.size()) != agents) {
    throw InvalidInputError("Scenario: one sensor per agent required");
  }
  for (const auto& sensor : sensors) sensor.validate(process.n());
  if (horizon < 1) throw InvalidInputError("Scenario: horizon must be >= 1");
  if (trials < 1) throw InvalidInputError("Scenario: trials must be >= 1");
  if (initial_state.size() != process.n()) {
    throw InvalidInputError("Scenario: initial state dimension mismatch");
  }
  if (algorithms.empty()) throw InvalidInputError("Scenario: no algorithms configured");
  std::set<std::string> labels;
  for (const auto& cfg : algorithms) {
    cfg.validate(graph);
    if (!labels.insert(cfg.effective_label()).second) {
      throw InvalidInputError("Scenario: duplicate algorithm label " + cfg.effective_label());
    }
  }
  if (!initial_beliefs.empty()) {
    if (static_cast<int>(initial_beliefs.size()) != agents) {
      throw InvalidInputError("Scenario: one initial belief per agent required");
    }
    for (const auto& b : initial_beliefs) {
      if (b.mean.size() != process.n() || b.info.rows() != process.n() ||
          b.info.cols() != process.n()) {
        throw InvalidInputError("Scenario: initial belief dimension mismatch");
      }
      if (!linalg::is_psd(b.info)) {
        throw InvalidInputError("Scenario: initial information matrices must be PSD");
      }
    }
  }
  for (const auto& cfg : algorithms) {
    if (cfg.algorithm == Algorithm::Kcf) {
      if (initial_beliefs.empty()) {
        throw InvalidInputError("Scenario: KCF requires positive definite initial beliefs");
      }
      for (const auto& b : initial_beliefs) {
        if (!linalg::sym_pseudo_inverse(b.info).positive_definite) {
          throw InvalidInputError("Scenario: KCF requires positive definite initial beliefs");
        }
      }
    }
  }
}

int TrialRecord::algorithm_index(const std::string& label) const {
  for (std::size_t a = 0; a < algorithm_labels.size(); ++a) {
    if (algorithm_labels[a] == label) return static_cast<int>(a);
  }
  throw InvalidInputError("TrialRecord: unknown algorithm label " + label);
}

TrialRecord run_trial(const Scenario& s, int trial_index) {
  s.validate();
  Rng rng(derive_trial_seed(s.seed, static_cast<std::uint64_t>(trial_index)));
  const TruthTable truth = simulate_truth(s, rng);
  const int agents = s.graph.agent_count();

  TrialRecord record;
  record.trial_index = trial_index;
  record.noise_checksum = truth.checksum;

  const std::vector<AgentBelief> init = s.resolved_initial_beliefs();
  for (const auto& cfg : s.algorithms) {
    record.algorithm_labels.push_back(cfg.effective_label());
    FilterState state = make_initial_state(cfg, s.graph, init);
    std::vector<std::vector<RecordCell>> per_step;
    per_step.reserve(s.horizon);
    for (int k = 0; k < s.horizon; ++k) {
      StepOutput step;
      try {
        step = run_filter_step(cfg, state, truth.measurements[k], s.graph,
                               s.process, s.sensors);
      } catch (const std::exception& e) {
        throw NumericFaultError("trial " + std::to_string(trial_index) + ", step " +
                                std::to_string(k + 1) + ", algorithm " +
                                cfg.effective_label() + ": " + e.what());
      }
      std::vector<RecordCell> row;
      row.reserve(agents);
      for (int i = 0; i < agents; ++i) {
        row.push_back(make_cell(step.posteriors[i], truth.states[k]));
      }
      per_step.push_back(std::move(row));
    }
    record.cells.push_back(std::move(per_step));
  }
  return record;
}

void run_monte_carlo(const Scenario& s,
                     const std::function<void(const TrialRecord&)>& sink,
                     int threads) {
  s.validate();
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min(threads, s.trials);

  if (threads == 1) {
    for (int t = 0; t < s.trials; ++t) sink(run_trial(s, t));
    return;
  }

  // workers fill a bounded reorder buffer; the drain delivers in trial order
  std::mutex mu;
  std::condition_variable cv;
  std::map<int, TrialRecord> ready;
  int next_to_claim = 0;
  int next_to_emit = 0;
  const int window = std::max(2 * threads, 8);
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      int mine;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] {
          return failure || next_to_claim >= s.trials ||
                 next_to_claim - next_to_emit < window;
        });
        if (failure || next_to_claim >= s.trials) return;
        mine = next_to_claim++;
      }
      try {
        TrialRecord r = run_trial(s, mine);
        std::lock_guard lock(mu);
        ready.emplace(mine, std::move(r));
        cv.notify_all();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        cv.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);

  {
    std::unique_lock lock(mu);
    while (next_to_emit < s.trials) {
      cv.wait(lock, [&] {
        return failure || ready.count(next_to_emit) > 0;
      });
      if (failure) break;
      TrialRecord r = std::move(ready.at(next_to_emit));
      ready.erase(next_to_emit);
      lock.unlock();
      sink(r);
      lock.lock();
      ++next_to_emit;
      cv.notify_all();
    }
  }
  cv.notify_all();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<TrialRecord> run_monte_carlo_collect(const Scenario& s, int threads) {
  std::vector<TrialRecord> out;
  out.reserve(s.trials);
  run_monte_carlo(s, [&](const TrialRecord& r) { out.push_back(r); }, threads);
  return out;
}

std::vector<double> compute_rmse(const std::vector<TrialRecord>& records,
                                 const std::string& algorithm_label, int component) {
  if (records.empty()) throw IncompleteDataError("compute_rmse: no records");
  const int a = records.front().algorithm_index(algorithm_label);
  const std::size_t horizon = records.front().cells.at(a).size();
  const std::size_t agents = records.front().cells.at(a).front().size();
  std::vector<double> psi(horizon, 0.0);
  for (const auto& r : records) {
    const int ai = r.algorithm_index(algorithm_label);
    if (r.cells.at(ai).size() != horizon) {
      throw IncompleteDataError("compute_rmse: records disagree on the horizon");
    }
    for (std::size_t k = 0; k < horizon; ++k) {
      if (r.cells[ai][k].size() != agents) {
        throw IncompleteDataError("compute_rmse: records disagree on the agent count");
      }
      double agent_mean = 0.0;
      for (const auto& cell : r.cells[ai][k]) {
        if (component < 0 || component >= cell.error.size()) {
          throw InvalidInputError("compute_rmse: component out of range");
        }
        agent_mean += cell.error(component) * cell.error(component);
      }
      psi[k] += agent_mean / static_cast<double>(agents);
    }
  }
  for (auto& v : psi) v = std::sqrt(v / static_cast<double>(records.size()));
  return psi;
}

namespace {

NeesPoint finish_nees_point(double sum, int count, int total, int state_dim) {
  NeesPoint pt;
  pt.excluded = total - count;
  if (count > 0) {
    pt.mean_nees = sum / count;
    const double dof = static_cast<double>(count) * state_dim;
    pt.chi2_lo = stats::chi_squared_quantile(0.025, dof) / count;
    pt.chi2_hi = stats::chi_squared_quantile(0.975, dof) / count;
  } else {
    pt.mean_nees = kNaN;
    pt.chi2_lo = kNaN;
    pt.chi2_hi = kNaN;
  }
  return pt;
}

}  // namespace

std::vector<NeesPoint> compute_nees_statistic(const std::vector<TrialRecord>& records,
                                              const std::string& algorithm_label,
                                              int agent, int state_dim) {
  if (records.empty()) throw IncompleteDataError("compute_nees_statistic: no records");
  const int a0 = records.front().algorithm_index(algorithm_label);
  const std::size_t horizon = records.front().cells.at(a0).size();
  std::vector<NeesPoint> out(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : records) {
      const int ai = r.algorithm_index(algorithm_label);
      const double nees = r.cells.at(ai).at(k).at(agent).nees;
      if (std::isfinite(nees)) {
        sum += nees;
        ++count;
      }
    }
    out[k] = finish_nees_point(sum, count, static_cast<int>(records.size()), state_dim);
  }
  return out;
}

BoundSeries compute_3sigma_bounds(const TrialRecord& record,
                                  const std::string& algorithm_label, int agent,
                                  int component) {
  const int a = record.algorithm_index(algorithm_label);
  BoundSeries series;
  for (const auto& row : record.cells.at(a)) {
    const RecordCell& cell = row.at(agent);
    series.abs_error.push_back(std::abs(cell.error(component)));
    series.bound.push_back(3.0 * cell.sigma(component));
  }
  return series;
}

RmseAccumulator::RmseAccumulator(const Scenario& s)
    : horizon_(s.horizon), agents_(s.graph.agent_count()), dim_(s.process.n()) {
  sums_.assign(s.algorithms.size(),
               std::vector<std::vector<double>>(
                   dim_, std::vector<double>(horizon_, 0.0)));
}

void RmseAccumulator::consume(const TrialRecord& r) {
  for (std::size_t a = 0; a < sums_.size(); ++a) {
    for (int k = 0; k < horizon_; ++k) {
      for (int c = 0; c < dim_; ++c) {
        double agent_mean = 0.0;
        for (int i = 0; i < agents_; ++i) {
          const double e = r.cells[a][k][i].error(c);
          agent_mean += e * e;
        }
        sums_[a][c][k] += agent_mean / agents_;
      }
    }
  }
  ++trials_seen_;
}

std::vector<std::vector<std::vector<double>>> RmseAccumulator::finish() const {
  auto out = sums_;
  for (auto& per_alg : out) {
    for (auto& per_comp : per_alg) {
      for (auto& v : per_comp) v = std::sqrt(v / std::max(1, trials_seen_));
    }
  }
  return out;
}

NeesAccumulator::NeesAccumulator(const Scenario& s)
    : horizon_(s.horizon), agents_(s.graph.agent_count()), dim_(s.process.n()) {
  sums_.assign(s.algorithms.size(),
               std::vector<std::vector<double>>(
                   agents_, std::vector<double>(horizon_, 0.0)));
  counts_.assign(s.algorithms.size(),
                 std::vector<std::vector<int>>(agents_, std::vector<int>(horizon_, 0)));
}

void NeesAccumulator::consume(const TrialRecord& r) {
  for (std::size_t a = 0; a < sums_.size(); ++a) {
    for (int k = 0; k < horizon_; ++k) {
      for (int i = 0; i < agents_; ++i) {
        const double nees = r.cells[a][k][i].nees;
        if (std::isfinite(nees)) {
          sums_[a][i][k] += nees;
          counts_[a][i][k] += 1;
        }
      }
    }
  }
  ++total_trials_;
}

std::vector<std::vector<std::vector<NeesPoint>>> NeesAccumulator::finish() const {
  std::vector<std::vector<std::vector<NeesPoint>>> out(sums_.size());
  for (std::size_t a = 0; a < sums_.size(); ++a) {
    out[a].resize(agents_);
    for (int i = 0; i < agents_; ++i) {
      out[a][i].resize(horizon_);
      for (int k = 0; k < horizon_; ++k) {
        out[a][i][k] = finish_nees_point(sums_[a][i][k], counts_[a][i][k],
                                         total_trials_, dim_);
      }
    }
  }
  return out;
}

}  // namespace dhif
