#ifndef MFL_RANDOM_HPP
#define MFL_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mfl {

// All randomness comes from mt19937_64 engines. Independent streams are
// keyed by a path of integers (e.g. {point, repetition}) which is folded into
// the root seed with SplitMix64, so a stream never depends on the order in
// which other streams are consumed.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(seed, path));
}

// k distinct indices drawn uniformly from [0, n), returned in ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng);

// Uniform random permutation of [0, n).
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

// Standard normal draw via Box-Muller on two 53-bit uniforms. Used instead of
// std::normal_distribution so noise is identical across standard libraries.
double standard_normal(Rng& rng);

}  // namespace mfl

#endif  // MFL_RANDOM_HPP
