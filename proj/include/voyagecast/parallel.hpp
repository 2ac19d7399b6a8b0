#pragma once

#include <cstddef>
#include <functional>

namespace voyagecast {

/// Worker count from VOYAGECAST_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index must write only its own outputs;
/// results are then independent of the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace voyagecast
