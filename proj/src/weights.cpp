#include "dhif/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"

namespace dhif {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd weighted_sum(const std::vector<Eigen::MatrixXd>& infos,
                             const Eigen::VectorXd& w) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(infos[0].rows(), infos[0].cols());
  for (std::size_t j = 0; j < infos.size(); ++j) s += w(j) * infos[j];
  return s;
}

// tr(S(w)^-1); +inf when singular. Fills s_inv when finite and requested.
double objective_at(const std::vector<Eigen::MatrixXd>& infos,
                    const Eigen::VectorXd& w, Eigen::MatrixXd* s_inv) {
  const auto si = linalg::sym_pseudo_inverse(weighted_sum(infos, w));
  if (!si.positive_definite) return kInf;
  if (s_inv) *s_inv = si.pinv;
  return si.pinv.trace();
}

// Cholesky-based objective for the grid search hot loop.
double objective_fast(const std::vector<Eigen::MatrixXd>& infos,
                      const Eigen::VectorXd& w, Eigen::MatrixXd& scratch) {
  scratch = weighted_sum(infos, w);
  Eigen::LLT<Eigen::MatrixXd> llt(scratch);
  if (llt.info() != Eigen::Success) return kInf;
  double trace = 0.0;
  const Eigen::Index n = scratch.rows();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e(i) = 1.0;
    trace += llt.solve(e)(i);
    e(i) = 0.0;
  }
  return std::isfinite(trace) ? trace : kInf;
}

WeightResult uniform_degenerate(int m) {
  WeightResult r;
  r.weights = Eigen::VectorXd::Constant(m, 1.0 / m);
  r.objective = kInf;
  r.degenerate = true;
  return r;
}

bool problem_is_degenerate(const WeightProblem& p) {
  // with all w_j >= lb > 0, range(S(w)) equals the range of sum Xi_j,
  // so the feasible region contains a PD point iff the plain sum is PD
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(p.infos[0].rows(), p.infos[0].cols());
  for (const auto& xi : p.infos) total += xi;
  return !linalg::sym_pseudo_inverse(total).positive_definite;
}

}  // namespace

void WeightProblem::validate() const {
  if (infos.empty()) throw InvalidInputError("WeightProblem: at least one source required");
  const Eigen::Index n = infos.front().rows();
  for (const auto& xi : infos) {
    if (xi.rows() != n || xi.cols() != n) {
      throw InvalidInputError("WeightProblem: all information matrices must be n x n");
    }
    if (!linalg::is_psd(xi)) {
      throw InvalidInputError("WeightProblem: information matrices must be symmetric PSD");
    }
  }
  const int m = static_cast<int>(infos.size());
  if (!(lower_bound > 0.0) || lower_bound * m >= 1.0) {
    throw InvalidInputError("WeightProblem: lower bound must lie in (0, 1/m)");
  }
}

double default_weight_lower_bound(int source_count) {
  return 1e-3 / source_count;
}

Eigen::VectorXd project_simplex_lower_bounded(const Eigen::VectorXd& v, double lb) {
  const int m = static_cast<int>(v.size());
  const double radius = 1.0 - m * lb;
  // project v - lb onto the simplex {u >= 0, sum u = radius}
  Eigen::VectorXd u = v.array() - lb;
  std::vector<double> s(u.data(), u.data() + m);
  std::sort(s.begin(), s.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  int rho = 0;
  for (int j = 0; j < m; ++j) {
    cumsum += s[j];
    const double t = (cumsum - radius) / (j + 1);
    if (s[j] - t > 0) {
      rho = j;
      theta = t;
    }
  }
  (void)rho;
  return (u.array() - theta).max(0.0) + lb;
}

WeightResult optimize_ci_weights(const WeightProblem& p,
                                 const Eigen::VectorXd* warm_start) {
  p.validate();
  const int m = static_cast<int>(p.infos.size());
  if (m == 1) {
    WeightResult r;
    r.weights = Eigen::VectorXd::Ones(1);
    r.objective = objective_at(p.infos, r.weights, nullptr);
    r.degenerate = !std::isfinite(r.objective);
    return r;
  }
  if (problem_is_degenerate(p)) return uniform_degenerate(m);

  Eigen::VectorXd w = (warm_start && warm_start->size() == m)
                          ? project_simplex_lower_bounded(*warm_start, p.lower_bound)
                          : project_simplex_lower_bounded(
                                Eigen::VectorXd::Constant(m, 1.0 / m), p.lower_bound);
  Eigen::MatrixXd s_inv;
  double f = objective_at(p.infos, w, &s_inv);

  double step = 1.0;
  constexpr int kMaxIters = 2000;
  for (int it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd grad(m);
    for (int j = 0; j < m; ++j) {
      grad(j) = -(s_inv * p.infos[j] * s_inv).trace();
    }
    // scale the first step to the gradient magnitude
    if (it == 0) {
      const double g = grad.cwiseAbs().maxCoeff();
      if (g > 0) step = std::max(1.0 / g, 1e-12);
    }
    bool accepted = false;
    Eigen::VectorXd w_next;
    Eigen::MatrixXd s_inv_next;
    double f_next = f;
    for (int bt = 0; bt < 60; ++bt) {
      w_next = project_simplex_lower_bounded(w - step * grad, p.lower_bound);
      f_next = objective_at(p.infos, w_next, &s_inv_next);
      if (f_next <= f + 1e-4 * grad.dot(w_next - w)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const bool converged =
        (w_next - w).norm() < 1e-14 && std::abs(f - f_next) <= 1e-14 * std::abs(f);
    w = w_next;
    f = f_next;
    s_inv = s_inv_next;
    if (converged) break;
    step *= 1.5;
  }
  WeightResult r;
  r.weights = w;
  r.objective = f;
  return r;
}

WeightResult brute_force_weights(const WeightProblem& p, int resolution) {
  p.validate();
  if (resolution < 1) throw InvalidInputError("brute_force_weights: resolution must be >= 1");
  const int m = static_cast<int>(p.infos.size());
  if (m > 4) {
    throw UnsupportedError("brute_force_weights: at most 4 sources supported");
  }
  if (m == 1) {
    WeightResult r;
    r.weights = Eigen::VectorXd::Ones(1);
    r.objective = objective_at(p.infos, r.weights, nullptr);
    r.degenerate = !std::isfinite(r.objective);
    return r;
  }
  if (problem_is_degenerate(p)) return uniform_degenerate(m);

  const int cmin = std::max<int>(
      1, static_cast<int>(std::ceil(p.lower_bound * resolution - 1e-12)));
  WeightResult best = uniform_degenerate(m);
  best.degenerate = false;

  // odometer over integer compositions c_1..c_m of `resolution`, c_j >= cmin
  std::vector<int> c(m, cmin);
  Eigen::VectorXd w(m);
  Eigen::MatrixXd scratch;
  const int spare = resolution - cmin * m;
  if (spare < 0) {
    throw InvalidInputError("brute_force_weights: resolution too coarse for the lower bound");
  }
  std::vector<int> free(m - 1, 0);  // free units assigned to the first m-1 slots
  while (true) {
    int used = 0;
    for (int j = 0; j + 1 < m; ++j) used += free[j];
    if (used <= spare) {
      for (int j = 0; j + 1 < m; ++j) c[j] = cmin + free[j];
      c[m - 1] = cmin + (spare - used);
      for (int j = 0; j < m; ++j) w(j) = static_cast<double>(c[j]) / resolution;
      const double f = objective_fast(p.infos, w, scratch);
      if (f < best.objective) {
        best.objective = f;
        best.weights = w;
      }
    }
    // advance odometer
    int j = 0;
    for (; j + 1 < m; ++j) {
      if (++free[j] <= spare) break;
      free[j] = 0;
    }
    if (j + 1 >= m) break;
  }
  if (!std::isfinite(best.objective)) return uniform_degenerate(m);
  return best;
}

WeightResult fast_ci_weights(const WeightProblem& p) {
  p.validate();
  const int m = static_cast<int>(p.infos.size());
  Eigen::VectorXd traces(m);
  for (int j = 0; j < m; ++j) traces(j) = std::max(p.infos[j].trace(), 0.0);
  const double total = traces.sum();
  if (total <= 0.0) return uniform_degenerate(m);

  Eigen::VectorXd w = traces / total;
  // clip below the bound and redistribute proportionally among the rest
  for (int pass = 0; pass < m; ++pass) {
    double fixed = 0.0, movable = 0.0;
    bool any_low = false;
    for (int j = 0; j < m; ++j) {
      if (w(j) <= p.lower_bound) {
        any_low = true;
        fixed += p.lower_bound;
      } else {
        movable += w(j);
      }
    }
    if (!any_low) break;
    const double scale = (1.0 - fixed) / movable;
    for (int j = 0; j < m; ++j) {
      w(j) = (w(j) <= p.lower_bound) ? p.lower_bound : w(j) * scale;
    }
  }
  WeightResult r;
  r.weights = w;
  r.objective = objective_at(p.infos, w, nullptr);
  return r;
}

}  // namespace dhif
