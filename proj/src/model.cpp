#include "dhif/model.hpp"

#include <algorithm>
#include <stack>
#include <string>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"

namespace dhif {

Eigen::MatrixXd ProcessModel::process_noise_covariance() const {
  return linalg::symmetrize(B * Q * B.transpose());
}

void ProcessModel::validate() const {
  if (F.rows() != F.cols()) throw InvalidInputError("ProcessModel: F must be square");
  if (B.rows() != F.rows()) throw InvalidInputError("ProcessModel: B row count must match F");
  if (Q.rows() != Q.cols() || Q.rows() != B.cols()) {
    throw InvalidInputError("ProcessModel: Q must be square with B's column count");
  }
  if (!linalg::is_symmetric(Q)) throw InvalidInputError("ProcessModel: Q must be symmetric");
  if (linalg::min_eigenvalue(Q) <= 0.0) {
    throw InvalidInputError("ProcessModel: Q must be positive definite");
  }
  if (linalg::numerical_rank(B) != B.cols()) {
    throw InvalidInputError("ProcessModel: B must have full column rank");
  }
}

SensorModel SensorModel::none(int n) {
  SensorModel s;
  s.H = Eigen::MatrixXd::Zero(0, n);
  s.R_inv = Eigen::MatrixXd::Zero(0, 0);
  return s;
}

void SensorModel::validate(int n) const {
  if (H.cols() != n) {
    throw InvalidInputError("SensorModel: H must have one column per state");
  }
  if (R_inv.rows() != m() || R_inv.cols() != m()) {
    throw InvalidInputError("SensorModel: R_inv must be m x m");
  }
  if (m() > 0) {
    if (!linalg::is_symmetric(R_inv)) {
      throw InvalidInputError("SensorModel: R_inv must be symmetric");
    }
    if (linalg::min_eigenvalue(R_inv) < -1e-12 * std::max(1.0, R_inv.cwiseAbs().maxCoeff())) {
      throw InvalidInputError("SensorModel: R_inv must be positive semi-definite");
    }
  }
}

NetworkGraph::NetworkGraph(int agent_count, std::vector<std::pair<int, int>> edges)
    : n_(agent_count), edges_(std::move(edges)) {
  if (n_ <= 0) throw InvalidInputError("NetworkGraph: agent count must be positive");
  in_.assign(n_, {});
  out_.assign(n_, {});
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  for (const auto& [from, to] : edges_) {
    if (from < 0 || from >= n_ || to < 0 || to >= n_) {
      throw InvalidInputError("NetworkGraph: edge endpoint out of range");
    }
    if (from == to) {
      throw InvalidInputError("NetworkGraph: self-loops are excluded from the edge set");
    }
    in_[to].push_back(from);
    out_[from].push_back(to);
  }
  for (auto& v : in_) std::sort(v.begin(), v.end());
  for (auto& v : out_) std::sort(v.begin(), v.end());
}

const std::vector<int>& NetworkGraph::in_neighbors(int i) const {
  if (i < 0 || i >= n_) throw InvalidInputError("NetworkGraph: agent id out of range");
  return in_[i];
}

const std::vector<int>& NetworkGraph::out_neighbors(int i) const {
  if (i < 0 || i >= n_) throw InvalidInputError("NetworkGraph: agent id out of range");
  return out_[i];
}

std::vector<int> NetworkGraph::inclusive_neighbors(int i) const {
  std::vector<int> j = in_neighbors(i);
  j.insert(std::lower_bound(j.begin(), j.end(), i), i);
  return j;
}

int NetworkGraph::max_in_degree() const {
  int d = 0;
  for (int i = 0; i < n_; ++i) d = std::max(d, in_degree(i));
  return d;
}

bool NetworkGraph::has_edge(int from, int to) const {
  return std::binary_search(out_neighbors(from).begin(), out_neighbors(from).end(), to);
}

NetworkGraph NetworkGraph::without_edge(int from, int to) const {
  std::vector<std::pair<int, int>> kept;
  kept.reserve(edges_.size());
  for (const auto& e : edges_) {
    if (e != std::make_pair(from, to)) kept.push_back(e);
  }
  return NetworkGraph(n_, std::move(kept));
}

Eigen::VectorXd propagate_state(const ProcessModel& model,
                                const Eigen::VectorXd& x, Rng& rng) {
  if (x.size() != model.n()) {
    throw InvalidInputError("propagate_state: state dimension mismatch");
  }
  return model.F * x + model.B * rng.gaussian_with_covariance(model.Q);
}

Eigen::VectorXd measure(const SensorModel& sensor, const Eigen::VectorXd& x,
                        Rng& rng) {
  if (!sensor.observing()) {
    throw PreconditionError("measure: sensor does not observe the target");
  }
  if (x.size() != sensor.H.cols()) {
    throw InvalidInputError("measure: state dimension mismatch");
  }
  Eigen::MatrixXd R;
  try {
    R = linalg::pd_inverse(sensor.R_inv);
  } catch (const NotIdentifiableError&) {
    throw PreconditionError("measure: R_inv is singular (non-observing sensor)");
  }
  return sensor.H * x + rng.gaussian_with_covariance(R);
}

bool is_observable(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H_stack) {
  const int n = static_cast<int>(F.rows());
  if (F.cols() != n) throw InvalidInputError("is_observable: F must be square");
  if (H_stack.cols() != n) {
    throw InvalidInputError("is_observable: H must have one column per state");
  }
  const int m = static_cast<int>(H_stack.rows());
  if (m == 0) return false;
  Eigen::MatrixXd obs(m * n, n);
  Eigen::MatrixXd block = H_stack;
  for (int k = 0; k < n; ++k) {
    obs.middleRows(k * m, m) = block;
    block = block * F;
  }
  return linalg::numerical_rank(obs) == n;
}

Eigen::MatrixXd stack_observations(const std::vector<SensorModel>& sensors,
                                   const std::vector<int>& agents, int n) {
  int rows = 0;
  for (int a : agents) rows += sensors.at(a).m();
  Eigen::MatrixXd stacked(rows, n);
  int at = 0;
  for (int a : agents) {
    const SensorModel& s = sensors.at(a);
    if (s.m() > 0) {
      stacked.middleRows(at, s.m()) = s.H;
      at += s.m();
    }
  }
  return stacked;
}

std::set<int> naive_set(const NetworkGraph& graph,
                        const std::vector<SensorModel>& sensors,
                        const Eigen::MatrixXd& F) {
  if (static_cast<int>(sensors.size()) != graph.agent_count()) {
    throw InvalidInputError("naive_set: one sensor per agent required");
  }
  const int n = static_cast<int>(F.rows());
  std::set<int> naive;
  for (int i = 0; i < graph.agent_count(); ++i) {
    const Eigen::MatrixXd stacked =
        stack_observations(sensors, graph.inclusive_neighbors(i), n);
    if (!is_observable(F, stacked)) naive.insert(i);
  }
  return naive;
}

std::vector<std::vector<int>> strongly_connected_components(
    const NetworkGraph& graph) {
  const int n = graph.agent_count();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int counter = 0;

  // iterative Tarjan; frame.second indexes into out_neighbors
  std::vector<std::pair<int, std::size_t>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    frames.emplace_back(root, 0);
    while (!frames.empty()) {
      auto& [v, ei] = frames.back();
      if (ei == 0) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      const auto& succ = graph.out_neighbors(v);
      if (ei < succ.size()) {
        const int w = succ[ei++];
        if (index[w] == -1) {
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      const int finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        low[frames.back().first] = std::min(low[frames.back().first], low[finished]);
      }
    }
  }
  return components;
}

namespace {

// reachable-set bitmaps per vertex via forward BFS
std::vector<std::vector<bool>> reachability(const NetworkGraph& graph) {
  const int n = graph.agent_count();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int s = 0; s < n; ++s) {
    std::vector<int> todo{s};
    reach[s][s] = true;
    while (!todo.empty()) {
      const int v = todo.back();
      todo.pop_back();
      for (int w : graph.out_neighbors(v)) {
        if (!reach[s][w]) {
          reach[s][w] = true;
          todo.push_back(w);
        }
      }
    }
  }
  return reach;
}

}  // namespace

std::vector<bool> boundedness_report(const NetworkGraph& graph,
                                     const std::vector<SensorModel>& sensors,
                                     const Eigen::MatrixXd& F) {
  if (static_cast<int>(sensors.size()) != graph.agent_count()) {
    throw InvalidInputError("boundedness_report: one sensor per agent required");
  }
  if (F.rows() != F.cols()) throw InvalidInputError("boundedness_report: F must be square");
  if (linalg::numerical_rank(F) != F.rows()) {
    throw PreconditionError("boundedness_report: F must be nonsingular");
  }
  const int n_state = static_cast<int>(F.rows());
  const int n = graph.agent_count();
  const auto comps = strongly_connected_components(graph);
  const auto reach = reachability(graph);

  std::vector<bool> ok(n, false);
  for (const auto& comp : comps) {
    // the component itself, then the component absorbing all its ancestors
    std::vector<int> with_ancestors;
    for (int v = 0; v < n; ++v) {
      for (int c : comp) {
        if (reach[v][c]) {
          with_ancestors.push_back(v);
          break;
        }
      }
    }
    const bool comp_obs =
        is_observable(F, stack_observations(sensors, comp, n_state));
    const bool aug_obs =
        comp_obs ||
        is_observable(F, stack_observations(sensors, with_ancestors, n_state));
    if (!aug_obs) continue;
    const std::vector<int>& sources = comp_obs ? comp : with_ancestors;
    for (int agent = 0; agent < n; ++agent) {
      if (ok[agent]) continue;
      for (int s : sources) {
        if (reach[s][agent]) {
          ok[agent] = true;
          break;
        }
      }
    }
  }
  return ok;
}

bool check_boundedness_condition(const NetworkGraph& graph,
                                 const std::vector<SensorModel>& sensors,
                                 const Eigen::MatrixXd& F, int agent) {
  if (agent < 0 || agent >= graph.agent_count()) {
    throw InvalidInputError("check_boundedness_condition: agent id out of range");
  }
  return boundedness_report(graph, sensors, F)[agent];
}

}  // namespace dhif
