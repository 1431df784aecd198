#include "mfl/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace mfl {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t state = seed;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t key : path) {
    state = out ^ (key + 0x632be59bd9b4e019ULL);
    out = splitmix64(state);
  }
  return out;
}

namespace {

// Unbiased integer in [0, bound) by rejection; std distributions are not
// specified bit-for-bit across implementations.
std::uint64_t uniform_below(std::uint64_t bound, Rng& rng) {
  // 2^64 mod bound; draws below it would bias the low residues.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

double uniform_open(Rng& rng) {
  // (0, 1) with 53 random bits.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(i, rng));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k && i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(n - i, rng));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(std::min(k, n));
  std::sort(pool.begin(), pool.end());
  return pool;
}

double standard_normal(Rng& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mfl
