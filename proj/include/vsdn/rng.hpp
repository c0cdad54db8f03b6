// Seeded RNG streams. Every stochastic site derives its own stream from
// (master seed, role, indices...) so results are independent of thread
// count and of how many sibling streams exist.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace vsdn {

using Mat = Eigen::MatrixXd;

// splitmix64 finalizer; good avalanche for combining seed components.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4a9c91bc5cd2dULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t v : ids) h = splitmix64(h ^ v);
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  Rng(std::uint64_t master, std::initializer_list<std::uint64_t> ids)
      : gen_(mix_seed(master, ids)) {}

  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t u64() { return gen_(); }

  Mat normal_mat(int rows, int cols) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace vsdn
