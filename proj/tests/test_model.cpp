#include <doctest.h>

#include <set>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"
#include "dhif/model.hpp"
#include "dhif/scenario_io.hpp"
#include "test_helpers.hpp"

using namespace dhif;

namespace {

ProcessModel paper_process() { return paper_fig3_scenario().process; }

std::vector<SensorModel> paper_sensors() { return paper_fig3_scenario().sensors; }

NetworkGraph paper_graph() { return paper_fig3_scenario().graph; }

// observability matrix assembled independently of the library routine
Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& f, const Eigen::MatrixXd& h) {
  const int n = static_cast<int>(f.rows());
  Eigen::MatrixXd obs(h.rows() * n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < n; ++k) {
    obs.middleRows(k * h.rows(), h.rows()) = h * power;
    power = f * power;
  }
  return obs;
}

// pairwise-reachability components: i ~ j iff both reach each other
std::vector<std::set<int>> reachability_components(const NetworkGraph& g) {
  const int n = g.agent_count();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int s = 0; s < n; ++s) {
    std::vector<int> todo{s};
    reach[s][s] = true;
    while (!todo.empty()) {
      int v = todo.back();
      todo.pop_back();
      for (int w : g.out_neighbors(v)) {
        if (!reach[s][w]) {
          reach[s][w] = true;
          todo.push_back(w);
        }
      }
    }
  }
  std::vector<std::set<int>> comps;
  std::vector<bool> done(n, false);
  for (int i = 0; i < n; ++i) {
    if (done[i]) continue;
    std::set<int> c;
    for (int j = 0; j < n; ++j) {
      if (reach[i][j] && reach[j][i]) {
        c.insert(j);
        done[j] = true;
      }
    }
    comps.push_back(std::move(c));
  }
  return comps;
}

NetworkGraph random_graph(Rng& rng, int n, double p) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && rng.uniform() < p) edges.emplace_back(i, j);
    }
  }
  return NetworkGraph(n, std::move(edges));
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("process model validation") {
  ProcessModel ok = paper_process();
  CHECK_NOTHROW(ok.validate());

  ProcessModel bad_q = ok;
  bad_q.Q(0, 0) = -1.0;
  CHECK_THROWS_AS(bad_q.validate(), InvalidInputError);

  ProcessModel bad_b = ok;
  bad_b.B.col(1) = bad_b.B.col(0);  // rank deficient
  CHECK_THROWS_AS(bad_b.validate(), InvalidInputError);

  ProcessModel bad_dim = ok;
  bad_dim.B = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(bad_dim.validate(), InvalidInputError);
}

TEST_CASE("propagate_state moves along the deterministic part") {
  // near-zero process noise isolates F x + B w with w ~ 0
  ProcessModel m = paper_process();
  m.Q = 1e-20 * Eigen::MatrixXd::Identity(4, 4);
  Rng rng(5);
  Eigen::VectorXd x(4);
  x << 1, 1, 0, 0;
  const Eigen::VectorXd next = propagate_state(m, x, rng);
  CHECK((next - x).norm() < 1e-8);  // zero velocity: state unchanged

  x << 1, 1, 2, -1;
  Eigen::VectorXd expected(4);
  expected << 1 + 4 * 2, 1 - 4 * 1, 2, -1;
  CHECK((propagate_state(m, x, rng) - expected).norm() < 1e-8);

  CHECK_THROWS_AS(propagate_state(m, Eigen::VectorXd::Zero(3), rng), InvalidInputError);
}

TEST_CASE("propagate_state noise has the configured scale") {
  const ProcessModel m = paper_process();
  Rng rng(17);
  const int draws = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < draws; ++i) sum += propagate_state(m, x0, rng);
  const double bound = 3.0 * std::sqrt(m.process_noise_covariance().trace() / draws);
  CHECK((sum / draws).norm() < bound);
}

TEST_CASE("measure is H x + v") {
  SensorModel s;
  s.H = Eigen::MatrixXd::Zero(1, 4);
  s.H(0, 0) = 1.0;
  s.R_inv = Eigen::MatrixXd::Constant(1, 1, 1e20);  // essentially noiseless
  Eigen::VectorXd x(4);
  x << 7, 0, 0, 0;
  Rng rng(3);
  CHECK(measure(s, x, rng)(0) == doctest::Approx(7.0).epsilon(1e-8));

  CHECK_THROWS_AS(measure(SensorModel::none(4), x, rng), PreconditionError);

  SensorModel singular;
  singular.H = Eigen::MatrixXd::Identity(2, 2);
  singular.R_inv = Eigen::MatrixXd::Zero(2, 2);
  Rng rng2(4);
  CHECK_THROWS_AS(measure(singular, Eigen::VectorXd::Zero(2), rng2), PreconditionError);
}

TEST_CASE("measurement noise variance matches R") {
  // sensor 2 of the built-in scenario: R = 225
  const SensorModel s = paper_sensors()[1];
  Rng rng(21);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  const int draws = 100000;
  double sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double z = measure(s, x, rng)(0);
    sq += z * z;
  }
  CHECK(sq / draws == doctest::Approx(225.0).epsilon(0.05));
}

TEST_CASE("measurement noise covariance matches R in two dimensions") {
  const SensorModel s = paper_sensors()[0];  // R = 225 I2
  Rng rng(22);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  const int draws = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd z = measure(s, x, rng);
    sum += z * z.transpose();
  }
  const Eigen::MatrixXd sample = sum / draws;
  const Eigen::MatrixXd r = 225.0 * Eigen::MatrixXd::Identity(2, 2);
  CHECK((sample - r).norm() < 0.05 * r.norm());
}

TEST_CASE("observability of the planar integrator") {
  const Eigen::MatrixXd f = paper_process().F;
  CHECK(is_observable(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)));

  Eigen::MatrixXd both(2, 4);
  both << 1, 0, 0, 0, 0, 1, 0, 0;
  CHECK(is_observable(f, both));
  CHECK(test::row_reduction_rank(observability_matrix(f, both)) == 4);

  Eigen::MatrixXd x_only(1, 4);
  x_only << 1, 0, 0, 0;
  CHECK_FALSE(is_observable(f, x_only));
  CHECK(test::row_reduction_rank(observability_matrix(f, x_only)) == 2);

  CHECK_FALSE(is_observable(f, Eigen::MatrixXd::Zero(0, 4)));
}

TEST_CASE("is_observable agrees with the row-reduction oracle") {
  Rng rng(30);
  int observable_seen = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform() * 5);  // n <= 6
    Eigen::MatrixXd f(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) f(r, c) = rng.gaussian();
    const int m = 1 + static_cast<int>(rng.uniform() * 2);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, n);
    for (int r = 0; r < m; ++r) h(r, static_cast<int>(rng.uniform() * n)) = 1.0;
    const bool expected = test::row_reduction_rank(observability_matrix(f, h)) == n;
    CHECK(is_observable(f, h) == expected);
    observable_seen += expected ? 1 : 0;
  }
  CHECK(observable_seen > 0);
}

TEST_CASE("naive classification") {
  // complete graph with one fully observing agent: nobody is naive
  std::vector<std::pair<int, int>> complete;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) complete.emplace_back(i, j);
  NetworkGraph g(3, complete);
  std::vector<SensorModel> sensors(3, SensorModel::none(2));
  sensors[0].H = Eigen::MatrixXd::Identity(2, 2);
  sensors[0].R_inv = Eigen::MatrixXd::Identity(2, 2);
  CHECK(naive_set(g, sensors, Eigen::MatrixXd::Identity(2, 2)).empty());

  // built-in topology: the blind chains are naive (agents 5, 6, 9, 10)
  const std::set<int> expected{4, 5, 8, 9};
  CHECK(naive_set(paper_graph(), paper_sensors(), paper_process().F) == expected);

  // no edges, no sensors: everyone
  NetworkGraph isolated(3, {});
  std::vector<SensorModel> blind(3, SensorModel::none(2));
  CHECK(naive_set(isolated, blind, Eigen::MatrixXd::Identity(2, 2)).size() == 3);
}

TEST_CASE("naive set shrinks (weakly) as edges are added") {
  Rng rng(31);
  const Eigen::MatrixXd f = paper_process().F;
  for (int rep = 0; rep < 8; ++rep) {
    NetworkGraph g = random_graph(rng, 6, 0.2);
    std::vector<SensorModel> sensors = paper_sensors();
    sensors.resize(6);
    const auto before = naive_set(g, sensors, f);
    // add one random missing edge
    int from = 0, to = 0;
    do {
      from = static_cast<int>(rng.uniform() * 6);
      to = static_cast<int>(rng.uniform() * 6);
    } while (from == to || g.has_edge(from, to));
    auto edges = g.edges();
    edges.emplace_back(from, to);
    const auto after = naive_set(NetworkGraph(6, edges), sensors, f);
    for (int a : after) CHECK(before.count(a) == 1);
  }
}

TEST_CASE("strongly connected components") {
  CHECK(strongly_connected_components(NetworkGraph(1, {})).size() == 1);

  NetworkGraph ring(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const auto rc = strongly_connected_components(ring);
  REQUIRE(rc.size() == 1);
  CHECK(rc[0] == std::vector<int>{0, 1, 2, 3});

  // two 2-cycles joined by one directed edge
  NetworkGraph two(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}, {1, 2}});
  const auto tc = strongly_connected_components(two);
  REQUIRE(tc.size() == 2);
  CHECK(tc[0].size() == 2);
  CHECK(tc[1].size() == 2);
}

TEST_CASE("SCCs partition the vertex set and match mutual reachability") {
  Rng rng(32);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform() * 7);
    NetworkGraph g = random_graph(rng, n, 0.25);
    const auto comps = strongly_connected_components(g);
    std::set<int> seen;
    for (const auto& c : comps) {
      for (int v : c) CHECK(seen.insert(v).second);  // pairwise disjoint
    }
    CHECK(static_cast<int>(seen.size()) == n);  // union is V

    std::set<std::set<int>> lib;
    for (const auto& c : comps) lib.insert(std::set<int>(c.begin(), c.end()));
    std::set<std::set<int>> oracle;
    for (const auto& c : reachability_components(g)) oracle.insert(c);
    CHECK(lib == oracle);
  }
}

TEST_CASE("boundedness condition") {
  const auto g = paper_graph();
  const auto sensors = paper_sensors();
  const Eigen::MatrixXd f = paper_process().F;
  for (int i = 0; i < g.agent_count(); ++i) {
    CHECK(check_boundedness_condition(g, sensors, f, i));
  }

  // isolated blind agent: no information can ever arrive
  NetworkGraph isolated(2, {});
  std::vector<SensorModel> sensors2{paper_sensors()[0], SensorModel::none(4)};
  CHECK(check_boundedness_condition(isolated, sensors2, f, 0));
  CHECK_FALSE(check_boundedness_condition(isolated, sensors2, f, 1));

  // observable singleton SCC feeding a chain
  NetworkGraph chain(2, {{0, 1}});
  CHECK(check_boundedness_condition(chain, sensors2, f, 0));
  CHECK(check_boundedness_condition(chain, sensors2, f, 1));

  CHECK_THROWS_AS(
      check_boundedness_condition(chain, sensors2, Eigen::MatrixXd::Zero(4, 4), 0),
      PreconditionError);
}

TEST_CASE("agents inside a jointly observable SCC satisfy the condition") {
  // 2-cycle where observability needs both sensors
  NetworkGraph g(2, {{0, 1}, {1, 0}});
  const auto paper = paper_sensors();
  std::vector<SensorModel> sensors{paper[1], paper[2]};  // x and y position
  const Eigen::MatrixXd f = paper_process().F;
  CHECK(check_boundedness_condition(g, sensors, f, 0));
  CHECK(check_boundedness_condition(g, sensors, f, 1));
  // each sensor alone is not enough
  CHECK(naive_set(g, sensors, f) == std::set<int>{0, 1});
}

TEST_CASE("graph invariants") {
  CHECK_THROWS_AS(NetworkGraph(2, {{0, 0}}), InvalidInputError);   // self-loop
  CHECK_THROWS_AS(NetworkGraph(2, {{0, 5}}), InvalidInputError);   // out of range
  const auto g = paper_graph();
  CHECK(g.max_in_degree() == 2);
  CHECK(g.inclusive_neighbors(5) == std::vector<int>{4, 5});  // J_6 = {5, 6}
  const auto removed = g.without_edge(3, 4);
  CHECK(removed.edges().size() == g.edges().size() - 1);
  CHECK_FALSE(removed.has_edge(3, 4));
}

TEST_SUITE_END();
