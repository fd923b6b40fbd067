#include <doctest.h>

#include <algorithm>

#include "dhif/errors.hpp"
#include "dhif/fusion.hpp"
#include "dhif/linalg.hpp"
#include "test_helpers.hpp"

using namespace dhif;

namespace {

LinearSource scalar_source(double c, double r, double a) {
  LinearSource s;
  s.C = Eigen::MatrixXd::Constant(1, 1, c);
  s.R = Eigen::MatrixXd::Constant(1, 1, r);
  s.a = Eigen::VectorXd::Constant(1, a);
  return s;
}

std::vector<LinearSource> random_sources(Rng& rng, int n, int count) {
  std::vector<LinearSource> out;
  for (int i = 0; i < count; ++i) {
    const int m = n + static_cast<int>(rng.uniform() * 2);
    LinearSource s;
    s.C = Eigen::MatrixXd(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) s.C(r, c) = rng.gaussian();
    s.R = test::random_spd(rng, m, 0.5, 3.0);
    s.a = test::random_vector(rng, m);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("fusion");

TEST_CASE("single identity source passes through") {
  Rng rng(41);
  LinearSource s;
  s.C = Eigen::MatrixXd::Identity(3, 3);
  s.R = test::random_spd(rng, 3);
  s.a = test::random_vector(rng, 3);
  const Estimate e = fuse_uncorrelated({s});
  CHECK((e.mean - s.a).norm() < 1e-12);
  CHECK((e.cov - s.R).norm() < 1e-10 * s.R.norm());
}

TEST_CASE("two scalar sources average by inverse variance") {
  const Estimate e = fuse_uncorrelated({scalar_source(1, 1, 0), scalar_source(1, 1, 2)});
  CHECK(e.mean(0) == doctest::Approx(1.0));
  CHECK(e.cov(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("matches the Lagrangian first-order system") {
  Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform() * 2);
    const auto sources = random_sources(rng, n, 2 + static_cast<int>(rng.uniform() * 2));
    const Estimate e = fuse_uncorrelated(sources);
    const auto oracle = test::lagrangian_fusion_oracle(sources);
    CHECK((e.mean - oracle.mean).norm() <= 1e-8 * std::max(1.0, oracle.mean.norm()));
    CHECK((e.cov - oracle.cov).norm() <= 1e-8 * oracle.cov.norm());
  }
}

TEST_CASE("unidentifiable parameter is rejected") {
  // both sources observe only the first coordinate
  LinearSource s;
  s.C = Eigen::MatrixXd::Zero(1, 2);
  s.C(0, 0) = 1.0;
  s.R = Eigen::MatrixXd::Identity(1, 1);
  s.a = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(fuse_uncorrelated({s, s}), NotIdentifiableError);
}

TEST_CASE("trace optimality among random unbiased weightings") {
  Rng rng(43);
  const int n = 3;
  const auto sources = random_sources(rng, n, 3);
  const Estimate best = fuse_uncorrelated(sources);
  const auto oracle = test::lagrangian_fusion_oracle(sources);
  for (int rep = 0; rep < 100; ++rep) {
    // random feasible gains: K~_i = K*_i + E_i - W K*_i with W = sum E_j C_j
    std::vector<Eigen::MatrixXd> perturb;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& s : sources) {
      Eigen::MatrixXd e(n, s.C.rows());
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < s.C.rows(); ++c) e(r, c) = 0.3 * rng.gaussian();
      perturb.push_back(e);
      w += e * s.C;
    }
    Eigen::MatrixXd constraint = Eigen::MatrixXd::Zero(n, n);
    double trace = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const Eigen::MatrixXd k = oracle.gains[i] + perturb[i] - w * oracle.gains[i];
      constraint += k * sources[i].C;
      trace += (k * sources[i].R * k.transpose()).trace();
    }
    REQUIRE((constraint - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-9);
    CHECK(best.cov.trace() <= trace + 1e-10);
  }
}

TEST_CASE("Monte Carlo consistency of uncorrelated fusion") {
  Rng rng(44);
  const int n = 3, trials = 10000;
  const auto sources = random_sources(rng, n, 3);
  const Eigen::VectorXd alpha = test::random_vector(rng, n, 2.0);
  std::vector<Eigen::MatrixXd> chols;
  for (const auto& s : sources) chols.push_back(linalg::cholesky_lower(s.R));

  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd first = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd fused_cov;
  for (int t = 0; t < trials; ++t) {
    auto draw = sources;
    for (std::size_t i = 0; i < draw.size(); ++i) {
      draw[i].a = draw[i].C * alpha + rng.gaussian_with_cholesky(chols[i]);
    }
    const Estimate e = fuse_uncorrelated(draw);
    const Eigen::VectorXd err = e.mean - alpha;
    first += err;
    second += err * err.transpose();
    fused_cov = e.cov;
  }
  const Eigen::VectorXd mean = first / trials;
  const Eigen::MatrixXd sample = second / trials - mean * mean.transpose();
  const double slack =
      3.0 * std::sqrt(2.0 * n / trials) *
      linalg::sym_pseudo_inverse(fused_cov).max_eigenvalue;
  CHECK(linalg::min_eigenvalue(fused_cov - sample) > -slack);
}

TEST_CASE("covariance intersection basics") {
  Rng rng(45);
  LinearSource s;
  s.C = Eigen::MatrixXd::Identity(2, 2);
  s.R = test::random_spd(rng, 2);
  s.a = test::random_vector(rng, 2);

  // one source, weight 1
  Estimate e = fuse_ci({s}, {1.0});
  CHECK((e.mean - s.a).norm() < 1e-12);
  CHECK((e.cov - s.R).norm() < 1e-10 * s.R.norm());

  // CI of a source with itself is a no-op
  e = fuse_ci({s, s}, {0.5, 0.5});
  CHECK((e.mean - s.a).norm() < 1e-12);
  CHECK((e.cov - s.R).norm() < 1e-10 * s.R.norm());

  // hand-evaluated scalar case
  e = fuse_ci({scalar_source(1, 1, 0), scalar_source(1, 2, 3)}, {0.5, 0.5});
  CHECK(e.cov(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(e.mean(0) == doctest::Approx(1.0));
}

TEST_CASE("CI weight validation") {
  const auto s = scalar_source(1, 1, 0);
  CHECK_THROWS_AS(fuse_ci({s, s}, {0.6, 0.6}), InvalidInputError);
  CHECK_THROWS_AS(fuse_ci({s, s}, {1.2, -0.2}), InvalidInputError);
  CHECK_THROWS_AS(fuse_ci({s, s}, {1.0}), InvalidInputError);
}

TEST_CASE("fusers are permutation invariant") {
  Rng rng(46);
  auto sources = random_sources(rng, 3, 3);
  std::vector<double> w{0.2, 0.5, 0.3};
  const Estimate a = fuse_ci(sources, w);
  const Estimate u = fuse_uncorrelated(sources);
  std::reverse(sources.begin(), sources.end());
  std::reverse(w.begin(), w.end());
  const Estimate b = fuse_ci(sources, w);
  const Estimate v = fuse_uncorrelated(sources);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((u.mean - v.mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((u.cov - v.cov).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("CI stays consistent under adversarial correlation") {
  // sources share a common latent error, so their cross-correlations are
  // maximal while each marginal covariance is reported exactly
  Rng rng(47);
  const int n = 2, trials = 10000;
  const Eigen::VectorXd alpha = test::random_vector(rng, n, 3.0);
  const Eigen::MatrixXd common_cov = test::random_spd(rng, n, 0.5, 2.0);
  const Eigen::MatrixXd common_chol = linalg::cholesky_lower(common_cov);

  std::vector<LinearSource> sources(3);
  std::vector<Eigen::MatrixXd> mix, own_chol;
  for (auto& s : sources) {
    s.C = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd g(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) g(r, c) = rng.gaussian();
    const Eigen::MatrixXd own = test::random_spd(rng, n, 0.2, 1.0);
    s.R = linalg::symmetrize(g * common_cov * g.transpose() + own);
    s.a = Eigen::VectorXd::Zero(n);
    mix.push_back(g);
    own_chol.push_back(linalg::cholesky_lower(own));
  }

  for (int wcase = 0; wcase < 3; ++wcase) {
    std::vector<double> w(3);
    double total = 0.0;
    for (auto& v : w) total += (v = 0.1 + rng.uniform());
    for (auto& v : w) v /= total;

    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd first = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd r_c;
    for (int t = 0; t < trials; ++t) {
      const Eigen::VectorXd shared = rng.gaussian_with_cholesky(common_chol);
      auto draw = sources;
      for (std::size_t i = 0; i < draw.size(); ++i) {
        draw[i].a = alpha + mix[i] * shared + rng.gaussian_with_cholesky(own_chol[i]);
      }
      const Estimate e = fuse_ci(draw, w);
      const Eigen::VectorXd err = e.mean - alpha;
      first += err;
      second += err * err.transpose();
      r_c = e.cov;
    }
    const Eigen::VectorXd mean = first / trials;
    const Eigen::MatrixXd sample = second / trials - mean * mean.transpose();
    const double slack =
        3.0 * std::sqrt(2.0 * n / trials) *
        linalg::sym_pseudo_inverse(r_c).max_eigenvalue;
    CHECK(linalg::min_eigenvalue(r_c - sample) > -slack);
  }
}

TEST_CASE("information conversions") {
  Estimate e{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  InformationPair p = to_information(e);
  CHECK((p.Xi - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-14);
  CHECK(p.xi.norm() < 1e-14);

  // scalar: (mu, sigma^2) -> (1/sigma^2, mu/sigma^2)
  Estimate scalar{Eigen::VectorXd::Constant(1, 3.0),
                  Eigen::MatrixXd::Constant(1, 1, 4.0)};
  p = to_information(scalar);
  CHECK(p.Xi(0, 0) == doctest::Approx(0.25));
  CHECK(p.xi(0) == doctest::Approx(0.75));

  InformationPair q{Eigen::MatrixXd::Constant(1, 1, 2.0),
                    Eigen::VectorXd::Constant(1, 2.0)};
  const Estimate back = from_information(q);
  CHECK(back.cov(0, 0) == doctest::Approx(0.5));
  CHECK(back.mean(0) == doctest::Approx(1.0));

  Rng rng(48);
  for (int rep = 0; rep < 5; ++rep) {
    Estimate r{test::random_vector(rng, 4), test::random_spd(rng, 4)};
    const Estimate round = from_information(to_information(r));
    CHECK((round.mean - r.mean).norm() <= 1e-10 * std::max(1.0, r.mean.norm()));
    CHECK((round.cov - r.cov).norm() <= 1e-10 * r.cov.norm());
  }

  CHECK_THROWS_AS(from_information(InformationPair{Eigen::MatrixXd::Zero(2, 2),
                                                   Eigen::VectorXd::Zero(2)}),
                  InfiniteUncertaintyError);
  CHECK_THROWS_AS(to_information(Estimate{Eigen::VectorXd::Zero(2),
                                          Eigen::MatrixXd::Zero(2, 2)}),
                  PreconditionError);
}

TEST_SUITE_END();
