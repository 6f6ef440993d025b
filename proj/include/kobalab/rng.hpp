#pragma once

// Deterministic random streams. Every sample index draws from its own stream
// derived from (root seed, stream id, index), so results do not depend on how
// work is split across threads.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "kobalab/linalg.hpp"

namespace kobalab {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

class Stream {
 public:
  Stream(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  Complex complex_normal();  // E|z|^2 = 1
  int integer(int lo, int hi);  // inclusive

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

CVector random_gaussian_vector(Stream& rng, int dim);
CVector random_unit_vector(Stream& rng, int dim);
/// Uniform in the Euclidean ball of the given radius (real dimension 2*dim).
CVector random_in_ball(Stream& rng, int dim, double radius);
/// Random point with norm drawn uniformly from [0, radius).
CVector random_radial(Stream& rng, int dim, double radius);
COperator random_operator(Stream& rng, int dim);
COperator random_hermitian(Stream& rng, int dim);

/// Stream ids used across the library so distinct experiments never share draws.
namespace streams {
inline constexpr std::uint64_t kLevi = 1;
inline constexpr std::uint64_t kPeak = 2;
inline constexpr std::uint64_t kDisc = 3;
inline constexpr std::uint64_t kKobayashiBall = 4;
inline constexpr std::uint64_t kLocalization = 5;
inline constexpr std::uint64_t kOrbit = 6;
inline constexpr std::uint64_t kScaling = 7;
inline constexpr std::uint64_t kHausdorff = 8;
inline constexpr std::uint64_t kLemmaBall = 9;
inline constexpr std::uint64_t kLemmaDisc = 10;
inline constexpr std::uint64_t kLemmaFinal = 11;
inline constexpr std::uint64_t kTheorem = 12;
inline constexpr std::uint64_t kNormalize = 13;
inline constexpr std::uint64_t kExperiment = 14;
inline constexpr std::uint64_t kScalarDraws = 15;
}  // namespace streams

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. fn must only write
/// to per-index storage.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace kobalab
