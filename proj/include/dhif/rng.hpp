#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dhif {

/// splitmix64 finalizer; used to derive independent per-trial seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// seed for trial `trial_index` of a run seeded with `run_seed`
std::uint64_t derive_trial_seed(std::uint64_t run_seed, std::uint64_t trial_index);

/// Seeded Gaussian source. Uniforms are mapped from raw mt19937_64 output
/// and normals come from Box-Muller, so streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// uniform in [0, 1)
  double uniform();

  /// standard normal draw
  double gaussian();

  Eigen::VectorXd gaussian_vector(int n);

  /// zero-mean draw with the given covariance (Cholesky coloring)
  Eigen::VectorXd gaussian_with_covariance(const Eigen::MatrixXd& cov);

  /// same, with a precomputed lower Cholesky factor
  Eigen::VectorXd gaussian_with_cholesky(const Eigen::MatrixXd& chol_lower);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// FNV-1a over raw double bytes; used to checksum noise streams.
class StreamChecksum {
 public:
  void add(double v);
  void add(const Eigen::VectorXd& v);
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace dhif
