#pragma once

#include <cstddef>
#include <functional>

namespace geoeval {

// Worker count: hardware concurrency, capped by GEOEVAL_THREADS when set.
std::size_t worker_count();

// Runs body(task, worker) for task in [0, n_tasks). Tasks are claimed
// dynamically; callers write results into per-task slots so output order
// never depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n_tasks, std::size_t workers,
                  const std::function<void(std::size_t task, std::size_t worker)>& body);

}  // namespace geoeval
