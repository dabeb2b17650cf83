#pragma once

#include <cstddef>
#include <functional>

namespace amdyn {

/// Worker count from AMDYN_WORKERS, falling back to the hardware concurrency.
std::size_t default_workers();

/// Runs body(begin, end, worker) over `workers` contiguous, disjoint slices of [0, n).
/// Slice boundaries depend only on (n, workers). The first exception thrown by any
/// slice is rethrown after all slices finish.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace amdyn
