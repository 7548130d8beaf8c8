#pragma once

#include <cstddef>
#include <span>

namespace silva {

/// Number of worker threads used by the parallel kernels.
int thread_count();
void set_thread_count(int threads);

/// Reduction chunk size. Sums are formed per fixed chunk and the chunk sums are
/// then added in index order, so results do not depend on the thread count.
inline constexpr std::size_t kReduceChunk = 512;

double deterministic_sum(std::span<const double> values);
double deterministic_dot(std::span<const double> a, std::span<const double> b);

}  // namespace silva
