#include "dhif/filters.hpp"

#include <cmath>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"

namespace dhif {
namespace {

// Posterior mean by minimum-norm least squares with the prior mean's
// null-space component added back:
//   mean = prior + pinv(M) (rhs - M prior)
// which reduces to M^-1 rhs when M is positive definite.
Posterior solve_information(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                            const Eigen::VectorXd& prior_mean) {
  linalg::require_finite(m, "posterior information matrix");
  linalg::require_finite(rhs, "posterior information vector");
  const auto si = linalg::sym_pseudo_inverse(m);
  Posterior out;
  out.info = linalg::symmetrize(m);
  out.cov = si.pinv;
  out.cov_valid = si.positive_definite;
  out.mean = prior_mean + si.pinv * (rhs - m * prior_mean);
  linalg::require_finite(out.mean, "posterior mean");
  return out;
}

void check_sizes(const std::vector<AgentBelief>& beliefs,
                 const std::vector<BroadcastMessage>& msgs,
                 const NetworkGraph& graph) {
  if (static_cast<int>(beliefs.size()) != graph.agent_count() ||
      static_cast<int>(msgs.size()) != graph.agent_count()) {
    throw InvalidInputError("filter update: one belief and one message per agent required");
  }
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Dhif: return "dhif";
    case Algorithm::Kla: return "kla";
    case Algorithm::Icf: return "icf";
    case Algorithm::Kcf: return "kcf";
    case Algorithm::Ckf: return "ckf";
  }
  throw InvalidInputError("unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "dhif") return Algorithm::Dhif;
  if (name == "kla") return Algorithm::Kla;
  if (name == "icf") return Algorithm::Icf;
  if (name == "kcf") return Algorithm::Kcf;
  if (name == "ckf") return Algorithm::Ckf;
  throw InvalidInputError("unknown algorithm name: " + name);
}

std::string weight_mode_name(WeightMode m) {
  switch (m) {
    case WeightMode::Optimal: return "optimal";
    case WeightMode::Fast: return "fast";
    case WeightMode::Uniform: return "uniform";
  }
  throw InvalidInputError("unknown weight mode");
}

WeightMode weight_mode_from_name(const std::string& name) {
  if (name == "optimal") return WeightMode::Optimal;
  if (name == "fast") return WeightMode::Fast;
  if (name == "uniform") return WeightMode::Uniform;
  throw InvalidInputError("unknown weight mode: " + name);
}

void FilterConfig::validate(const NetworkGraph& graph) const {
  const bool needs_epsilon =
      algorithm == Algorithm::Icf ||
      (algorithm == Algorithm::Kcf && !delta.has_value());
  if (needs_epsilon) {
    const double cap = 1.0 / std::max(1, graph.max_in_degree());
    if (!(epsilon > 0.0 && epsilon < cap)) {
      throw InvalidInputError("FilterConfig: epsilon must lie in (0, 1/max in-degree)");
    }
  }
  if (algorithm == Algorithm::Icf && n_hint < 1) {
    throw InvalidInputError("FilterConfig: ICF requires n_hint >= 1");
  }
  if (delta.has_value() && !(*delta > 0.0)) {
    throw InvalidInputError("FilterConfig: delta must be positive");
  }
}

BroadcastMessage make_message(const AgentBelief& belief, const SensorModel& sensor,
                              const std::optional<Eigen::VectorXd>& z) {
  const int n = static_cast<int>(belief.mean.size());
  BroadcastMessage msg;
  msg.Xi = belief.info;
  msg.xi = belief.info * belief.mean;
  if (sensor.observing()) {
    if (!z.has_value()) {
      throw InvalidInputError("make_message: observing sensor needs a measurement");
    }
    msg.S = linalg::symmetrize(sensor.H.transpose() * sensor.R_inv * sensor.H);
    msg.y = sensor.H.transpose() * sensor.R_inv * (*z);
  } else {
    if (z.has_value()) {
      throw PreconditionError("make_message: non-observing agents never synthesize measurements");
    }
    msg.S = Eigen::MatrixXd::Zero(n, n);
    msg.y = Eigen::VectorXd::Zero(n);
  }
  return msg;
}

std::vector<Posterior> dhif_update(const std::vector<AgentBelief>& beliefs,
                                   const std::vector<BroadcastMessage>& msgs,
                                   const NetworkGraph& graph,
                                   const std::vector<Eigen::VectorXd>& weights_per_agent) {
  check_sizes(beliefs, msgs, graph);
  if (static_cast<int>(weights_per_agent.size()) != graph.agent_count()) {
    throw InvalidInputError("dhif_update: one weight vector per agent required");
  }
  const int n = static_cast<int>(beliefs.front().mean.size());
  std::vector<Posterior> out(graph.agent_count());
  for (int i = 0; i < graph.agent_count(); ++i) {
    const auto inclusive = graph.inclusive_neighbors(i);
    const Eigen::VectorXd& w = weights_per_agent[i];
    if (w.size() != static_cast<Eigen::Index>(inclusive.size())) {
      throw InvalidInputError("dhif_update: weights must be indexed by the inclusive neighborhood");
    }
    if (std::abs(w.sum() - 1.0) > 1e-9 || w.minCoeff() <= 0.0) {
      throw InvalidInputError("dhif_update: weights must be positive and sum to one");
    }
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (std::size_t jj = 0; jj < inclusive.size(); ++jj) {
      const BroadcastMessage& msg = msgs[inclusive[jj]];
      info += w(jj) * msg.Xi + msg.S;
      rhs += w(jj) * msg.xi + msg.y;
    }
    out[i] = solve_information(info, rhs, beliefs[i].mean);
  }
  return out;
}

std::vector<Posterior> kla_update(const std::vector<AgentBelief>& beliefs,
                                  const std::vector<BroadcastMessage>& msgs,
                                  const NetworkGraph& graph,
                                  const std::vector<Eigen::VectorXd>& sigma_per_agent) {
  check_sizes(beliefs, msgs, graph);
  if (static_cast<int>(sigma_per_agent.size()) != graph.agent_count()) {
    throw InvalidInputError("kla_update: one sigma vector per agent required");
  }
  const int n = static_cast<int>(beliefs.front().mean.size());
  std::vector<Posterior> out(graph.agent_count());
  for (int i = 0; i < graph.agent_count(); ++i) {
    const auto inclusive = graph.inclusive_neighbors(i);
    const Eigen::VectorXd& s = sigma_per_agent[i];
    if (s.size() != static_cast<Eigen::Index>(inclusive.size()) ||
        std::abs(s.sum() - 1.0) > 1e-9 || s.minCoeff() < 0.0) {
      throw InvalidInputError("kla_update: sigma must be row-stochastic over the inclusive neighborhood");
    }
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (std::size_t jj = 0; jj < inclusive.size(); ++jj) {
      const BroadcastMessage& msg = msgs[inclusive[jj]];
      info += s(jj) * (msg.Xi + msg.S);
      rhs += s(jj) * (msg.xi + msg.y);
    }
    out[i] = solve_information(info, rhs, beliefs[i].mean);
  }
  return out;
}

std::vector<Posterior> icf_update(const std::vector<AgentBelief>& beliefs,
                                  const std::vector<BroadcastMessage>& msgs,
                                  const NetworkGraph& graph, const FilterConfig& cfg) {
  check_sizes(beliefs, msgs, graph);
  cfg.validate(graph);
  const int n = static_cast<int>(beliefs.front().mean.size());
  const double big_n = static_cast<double>(cfg.n_hint);
  std::vector<Posterior> out(graph.agent_count());
  for (int i = 0; i < graph.agent_count(); ++i) {
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    const auto inclusive = graph.inclusive_neighbors(i);
    for (int j : inclusive) {
      const double sigma =
          (j == i) ? 1.0 - cfg.epsilon * graph.in_degree(i) : cfg.epsilon;
      const BroadcastMessage& msg = msgs[j];
      info += sigma * (msg.Xi + big_n * msg.S);
      rhs += sigma * (msg.xi + big_n * msg.y);
    }
    out[i] = solve_information(info, rhs, beliefs[i].mean);
  }
  return out;
}

std::vector<Posterior> kcf_update(const std::vector<AgentBelief>& beliefs,
                                  const std::vector<BroadcastMessage>& msgs,
                                  const NetworkGraph& graph, const FilterConfig& cfg) {
  check_sizes(beliefs, msgs, graph);
  cfg.validate(graph);
  const int n = static_cast<int>(beliefs.front().mean.size());
  // neighbor prior means recovered from the broadcast information pairs
  std::vector<Eigen::VectorXd> prior_means(graph.agent_count());
  for (int j = 0; j < graph.agent_count(); ++j) {
    const auto si = linalg::sym_pseudo_inverse(msgs[j].Xi);
    if (!si.positive_definite) {
      throw PreconditionError("kcf_update: KCF requires positive definite priors");
    }
    prior_means[j] = si.pinv * msgs[j].xi;
  }
  std::vector<Posterior> out(graph.agent_count());
  for (int i = 0; i < graph.agent_count(); ++i) {
    Eigen::MatrixXd s_bar = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd y_bar = Eigen::VectorXd::Zero(n);
    for (int j : graph.inclusive_neighbors(i)) {
      s_bar += msgs[j].S;
      y_bar += msgs[j].y;
    }
    const Eigen::MatrixXd info = linalg::symmetrize(msgs[i].Xi + s_bar);
    const auto si = linalg::sym_pseudo_inverse(info);
    if (!si.positive_definite) {
      throw PreconditionError("kcf_update: posterior covariance is singular");
    }
    Eigen::VectorXd consensus = Eigen::VectorXd::Zero(n);
    for (int j : graph.in_neighbors(i)) {
      consensus += prior_means[j] - prior_means[i];
    }
    const double delta =
        cfg.delta.has_value() ? *cfg.delta : cfg.epsilon / (1.0 + si.pinv.trace());
    Posterior post;
    post.info = info;
    post.cov = si.pinv;
    post.cov_valid = true;
    post.mean = prior_means[i] + si.pinv * (y_bar - s_bar * prior_means[i]) +
                delta * si.pinv * consensus;
    linalg::require_finite(post.mean, "kcf posterior mean");
    out[i] = post;
  }
  return out;
}

Posterior ckf_update(const AgentBelief& belief,
                     const std::vector<BroadcastMessage>& msgs) {
  const int n = static_cast<int>(belief.mean.size());
  Eigen::MatrixXd info = belief.info;
  Eigen::VectorXd rhs = belief.info * belief.mean;
  for (const auto& msg : msgs) {
    if (msg.S.rows() != n) throw InvalidInputError("ckf_update: message dimension mismatch");
    info += msg.S;
    rhs += msg.y;
  }
  return solve_information(info, rhs, belief.mean);
}

std::vector<Eigen::VectorXd> kla_uniform_sigma(const NetworkGraph& graph) {
  std::vector<Eigen::VectorXd> sigma(graph.agent_count());
  for (int i = 0; i < graph.agent_count(); ++i) {
    const auto inclusive = graph.inclusive_neighbors(i);
    sigma[i] = Eigen::VectorXd::Constant(inclusive.size(), 1.0 / inclusive.size());
  }
  return sigma;
}

AgentBelief dhif_predict(const Eigen::VectorXd& mean, const Eigen::MatrixXd& info,
                         const ProcessModel& model) {
  if (mean.size() != model.n() || info.rows() != model.n() ||
      info.cols() != model.n()) {
    throw InvalidInputError("dhif_predict: dimension mismatch");
  }
  AgentBelief next;
  next.mean = model.F * mean;
  const auto si = linalg::sym_pseudo_inverse(info);
  if (si.positive_definite) {
    const Eigen::MatrixXd p_next =
        model.F * si.pinv * model.F.transpose() + model.process_noise_covariance();
    next.info = linalg::pd_inverse(p_next);
    return next;
  }
  // information-form identity, well defined for PSD info because Q > 0:
  //   Xi' = M - M B (Q^-1 + B^T M B)^-1 B^T M,  M = F^-T Xi F^-1
  if (linalg::numerical_rank(model.F) != model.n()) {
    throw PreconditionError(
        "dhif_predict: information-form prediction requires a nonsingular F");
  }
  const Eigen::MatrixXd f_inv = model.F.inverse();
  const Eigen::MatrixXd m = linalg::symmetrize(f_inv.transpose() * info * f_inv);
  const Eigen::MatrixXd q_inv = linalg::pd_inverse(model.Q);
  const Eigen::MatrixXd gain = linalg::pd_inverse(
      q_inv + model.B.transpose() * m * model.B);
  next.info = linalg::symmetrize(m - m * model.B * gain * model.B.transpose() * m);
  return next;
}

Estimate predict_covariance(const Estimate& posterior, const ProcessModel& model) {
  model.validate();
  return Estimate{
      model.F * posterior.mean,
      linalg::symmetrize(model.F * posterior.cov * model.F.transpose() +
                         model.process_noise_covariance())};
}

FilterState make_initial_state(const FilterConfig& cfg, const NetworkGraph& graph,
                               const std::vector<AgentBelief>& initial_beliefs) {
  if (static_cast<int>(initial_beliefs.size()) != graph.agent_count()) {
    throw InvalidInputError("make_initial_state: one initial belief per agent required");
  }
  FilterState state;
  if (cfg.algorithm == Algorithm::Ckf) {
    // centralized prior: the first agent's belief stands for the fusion
    // center's (scenarios using CKF share one prior across agents)
    state.beliefs = {initial_beliefs.front()};
  } else {
    state.beliefs = initial_beliefs;
  }
  if (cfg.algorithm == Algorithm::Dhif) {
    state.last_weights.resize(graph.agent_count());
  }
  return state;
}

StepOutput run_filter_step(const FilterConfig& cfg, FilterState& state,
                           const std::vector<std::optional<Eigen::VectorXd>>& measurements,
                           const NetworkGraph& graph, const ProcessModel& model,
                           const std::vector<SensorModel>& sensors) {
  const int agent_count = graph.agent_count();
  if (static_cast<int>(sensors.size()) != agent_count ||
      static_cast<int>(measurements.size()) != agent_count) {
    throw InvalidInputError("run_filter_step: one sensor and measurement slot per agent");
  }

  // phase 1: every broadcast is computed from the pre-step snapshot
  std::vector<BroadcastMessage> msgs(agent_count);
  if (cfg.algorithm == Algorithm::Ckf) {
    for (int i = 0; i < agent_count; ++i) {
      // the center only consumes measurement information
      AgentBelief dummy{Eigen::VectorXd::Zero(model.n()),
                        Eigen::MatrixXd::Zero(model.n(), model.n())};
      msgs[i] = make_message(dummy, sensors[i], measurements[i]);
    }
  } else {
    for (int i = 0; i < agent_count; ++i) {
      msgs[i] = make_message(state.beliefs[i], sensors[i], measurements[i]);
    }
  }

  // phase 2: updates read only the snapshot
  StepOutput out;
  std::vector<Posterior> posts;
  switch (cfg.algorithm) {
    case Algorithm::Dhif: {
      if (static_cast<int>(state.last_weights.size()) != agent_count) {
        state.last_weights.assign(agent_count, Eigen::VectorXd());
      }
      std::vector<Eigen::VectorXd> weights(agent_count);
      for (int i = 0; i < agent_count; ++i) {
        const auto inclusive = graph.inclusive_neighbors(i);
        WeightProblem prob;
        prob.lower_bound = default_weight_lower_bound(static_cast<int>(inclusive.size()));
        for (int j : inclusive) prob.infos.push_back(msgs[j].Xi);
        switch (cfg.weight_mode) {
          case WeightMode::Optimal: {
            const Eigen::VectorXd* warm =
                (state.last_weights[i].size() == static_cast<Eigen::Index>(inclusive.size()))
                    ? &state.last_weights[i]
                    : nullptr;
            weights[i] = optimize_ci_weights(prob, warm).weights;
            break;
          }
          case WeightMode::Fast:
            weights[i] = fast_ci_weights(prob).weights;
            break;
          case WeightMode::Uniform:
            weights[i] = Eigen::VectorXd::Constant(inclusive.size(),
                                                   1.0 / inclusive.size());
            break;
        }
        state.last_weights[i] = weights[i];
      }
      posts = dhif_update(state.beliefs, msgs, graph, weights);
      out.weights_used = std::move(weights);
      break;
    }
    case Algorithm::Kla:
      posts = kla_update(state.beliefs, msgs, graph, kla_uniform_sigma(graph));
      break;
    case Algorithm::Icf:
      posts = icf_update(state.beliefs, msgs, graph, cfg);
      break;
    case Algorithm::Kcf:
      posts = kcf_update(state.beliefs, msgs, graph, cfg);
      break;
    case Algorithm::Ckf: {
      const Posterior center = ckf_update(state.beliefs.front(), msgs);
      state.beliefs.front() = dhif_predict(center.mean, center.info, model);
      out.posteriors.assign(agent_count, center);
      return out;
    }
  }

  for (int i = 0; i < agent_count; ++i) {
    state.beliefs[i] = dhif_predict(posts[i].mean, posts[i].info, model);
  }
  out.posteriors = std::move(posts);
  return out;
}

}  // namespace dhif
