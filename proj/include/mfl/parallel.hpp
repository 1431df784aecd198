#ifndef MFL_PARALLEL_HPP
#define MFL_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace mfl {

// Runs fn(0..n-1) on at most `jobs` threads (0 = hardware concurrency).
// Callers write results into slots addressed by the index, so the outcome is
// independent of scheduling. The exception from the lowest failing index is
// rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

std::size_t default_jobs() noexcept;

}  // namespace mfl

#endif  // MFL_PARALLEL_HPP
