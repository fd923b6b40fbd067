#include <doctest.h>

#include <cmath>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"
#include "dhif/weights.hpp"
#include "test_helpers.hpp"

using namespace dhif;

namespace {

WeightProblem random_problem(Rng& rng, int sources, int n) {
  WeightProblem p;
  for (int i = 0; i < sources; ++i) p.infos.push_back(test::random_spd(rng, n));
  p.lower_bound = default_weight_lower_bound(sources);
  return p;
}

double objective(const WeightProblem& p, const Eigen::VectorXd& w) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p.infos[0].rows(), p.infos[0].cols());
  for (std::size_t j = 0; j < p.infos.size(); ++j) s += w(j) * p.infos[j];
  return linalg::pd_inverse(s).trace();
}

void check_feasible(const WeightProblem& p, const Eigen::VectorXd& w) {
  CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
  CHECK(w.minCoeff() >= p.lower_bound - 1e-12);
}

}  // namespace

TEST_SUITE_BEGIN("weights");

TEST_CASE("single source gets the whole weight") {
  WeightProblem p;
  p.infos = {Eigen::MatrixXd::Identity(2, 2)};
  p.lower_bound = default_weight_lower_bound(1);
  CHECK(optimize_ci_weights(p).weights(0) == doctest::Approx(1.0));
  CHECK(brute_force_weights(p, 200).weights(0) == doctest::Approx(1.0));
}

TEST_CASE("two scalar sources: the objective is monotone toward the bound") {
  // tr((w1 * 1 + w2 * 2)^-1) = 1 / (2 - w1) improves as w1 drops to the bound
  WeightProblem p;
  p.infos = {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0)};
  p.lower_bound = 0.01;
  const auto res = optimize_ci_weights(p);
  CHECK(res.weights(0) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(res.weights(1) == doctest::Approx(0.99).epsilon(1e-6));

  const auto grid = brute_force_weights(p, 200);
  CHECK(grid.weights(0) == doctest::Approx(0.01));  // 2/200 respects the bound
  CHECK(grid.weights(1) == doctest::Approx(0.99));
}

TEST_CASE("continuous solver matches the grid oracle") {
  Rng rng(51);
  for (int rep = 0; rep < 10; ++rep) {
    const int m = 2 + static_cast<int>(rng.uniform() * 3);
    const auto p = random_problem(rng, m, 4);
    const auto cont = optimize_ci_weights(p);
    const auto grid = brute_force_weights(p, 200);
    check_feasible(p, cont.weights);
    check_feasible(p, grid.weights);
    CHECK(cont.objective <= grid.objective + 1e-12);  // grid cannot beat the optimum
    CHECK(std::abs(cont.objective - grid.objective) < 1e-3);
  }
}

TEST_CASE("returned point is a minimum over random feasible directions") {
  Rng rng(52);
  const auto p = random_problem(rng, 3, 4);
  const auto res = optimize_ci_weights(p);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd v(3);
    for (int j = 0; j < 3; ++j) v(j) = rng.uniform();
    const Eigen::VectorXd w = project_simplex_lower_bounded(v, p.lower_bound);
    // any convex combination of feasible points stays feasible
    const double t = rng.uniform();
    const Eigen::VectorXd mix = t * w + (1 - t) * res.weights;
    CHECK(objective(p, mix) >= res.objective - 1e-6 * std::abs(res.objective));
  }
}

TEST_CASE("argmin is invariant to a common scaling of the information") {
  Rng rng(53);
  auto p = random_problem(rng, 3, 3);
  const auto base = optimize_ci_weights(p);
  WeightProblem scaled = p;
  for (auto& xi : scaled.infos) xi *= 7.5;
  const auto res = optimize_ci_weights(scaled);
  CHECK((res.weights - base.weights).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(res.objective == doctest::Approx(base.objective / 7.5).epsilon(1e-9));
}

TEST_CASE("PSD-singular sources are fine when the sum is definite") {
  WeightProblem p;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 2);
  b(1, 1) = 1.0;
  p.infos = {a, b};
  p.lower_bound = default_weight_lower_bound(2);
  const auto res = optimize_ci_weights(p);
  CHECK_FALSE(res.degenerate);
  check_feasible(p, res.weights);
  // symmetric problem: the optimum is the uniform point
  CHECK(res.weights(0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("degenerate problems fall back to uniform") {
  WeightProblem p;
  p.infos = {Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3)};
  p.lower_bound = default_weight_lower_bound(2);
  for (const auto& res :
       {optimize_ci_weights(p), brute_force_weights(p, 100), fast_ci_weights(p)}) {
    CHECK(res.degenerate);
    CHECK(res.weights(0) == 0.5);  // exactly uniform
    CHECK(res.weights(1) == 0.5);
  }

  // nonzero but rank deficient in every feasible combination
  Eigen::MatrixXd low = Eigen::MatrixXd::Zero(2, 2);
  low(0, 0) = 2.0;
  WeightProblem p2;
  p2.infos = {low, low};
  p2.lower_bound = default_weight_lower_bound(2);
  CHECK(optimize_ci_weights(p2).degenerate);
}

TEST_CASE("problem validation") {
  WeightProblem empty;
  empty.lower_bound = 0.1;
  CHECK_THROWS_AS(optimize_ci_weights(empty), InvalidInputError);

  WeightProblem bad_bound;
  bad_bound.infos = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
  bad_bound.lower_bound = 0.6;  // 2 * 0.6 > 1
  CHECK_THROWS_AS(optimize_ci_weights(bad_bound), InvalidInputError);

  WeightProblem not_psd;
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 2, 2, 1;
  not_psd.infos = {indef};
  not_psd.lower_bound = 0.5;
  CHECK_THROWS_AS(optimize_ci_weights(not_psd), InvalidInputError);

  WeightProblem fine = bad_bound;
  fine.lower_bound = 0.2;
  CHECK_THROWS_AS(brute_force_weights(fine, 0), InvalidInputError);
  WeightProblem five;
  five.infos.assign(5, Eigen::MatrixXd::Identity(2, 2));
  five.lower_bound = default_weight_lower_bound(5);
  CHECK_THROWS_AS(brute_force_weights(five, 10), UnsupportedError);
}

TEST_CASE("fast heuristic") {
  // equal information: uniform weights
  WeightProblem p;
  p.infos = {Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)};
  p.lower_bound = default_weight_lower_bound(2);
  auto res = fast_ci_weights(p);
  CHECK(res.weights(0) == doctest::Approx(0.5));

  // trace-proportional weighting
  WeightProblem p2;
  p2.infos = {Eigen::MatrixXd::Identity(2, 2), 3.0 * Eigen::MatrixXd::Identity(2, 2)};
  p2.lower_bound = default_weight_lower_bound(2);
  res = fast_ci_weights(p2);
  CHECK(res.weights(0) == doctest::Approx(0.25));
  CHECK(res.weights(1) == doctest::Approx(0.75));

  // stays within a sane envelope of the optimizer on random instances
  Rng rng(54);
  for (int rep = 0; rep < 10; ++rep) {
    const auto prob = random_problem(rng, 3, 4);
    const auto fast = fast_ci_weights(prob);
    const auto best = optimize_ci_weights(prob);
    check_feasible(prob, fast.weights);
    CHECK(fast.objective >= best.objective - 1e-9);
    CHECK(fast.objective <= 2.0 * best.objective);
  }

  // clipping keeps the simplex when one trace dominates
  WeightProblem p3;
  p3.infos = {1e-9 * Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
  p3.lower_bound = 0.05;
  res = fast_ci_weights(p3);
  check_feasible(p3, res.weights);
  CHECK(res.weights(0) == doctest::Approx(0.05));
}

TEST_SUITE_END();
