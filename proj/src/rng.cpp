#include "dhif/rng.hpp"

#include <cmath>
#include <cstring>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"

namespace dhif {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_trial_seed(std::uint64_t run_seed, std::uint64_t trial_index) {
  return splitmix64(run_seed ^ splitmix64(trial_index + 1));
}

double Rng::uniform() {
  // 53 mantissa bits of a raw engine draw
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Eigen::VectorXd Rng::gaussian_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = gaussian();
  return v;
}

Eigen::VectorXd Rng::gaussian_with_covariance(const Eigen::MatrixXd& cov) {
  return gaussian_with_cholesky(linalg::cholesky_lower(cov));
}

Eigen::VectorXd Rng::gaussian_with_cholesky(const Eigen::MatrixXd& chol_lower) {
  return chol_lower * gaussian_vector(static_cast<int>(chol_lower.rows()));
}

void StreamChecksum::add(double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    state_ ^= (bits >> (8 * i)) & 0xffULL;
    state_ *= 0x100000001b3ULL;
  }
}

void StreamChecksum::add(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) add(v(i));
}

}  // namespace dhif
