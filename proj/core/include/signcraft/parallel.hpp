#pragma once

#include <cstddef>
#include <functional>

namespace signcraft {

/// Worker cap from SIGNCRAFT_THREADS (0 or unset picks hardware concurrency).
std::size_t worker_count();

/// Overrides the environment for the current process; 0 restores auto.
void set_worker_count(std::size_t n);

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker
/// so results never depend on the number of threads, provided body(i) only
/// writes state owned by index i. `grain` is the minimum indices per worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t grain = 1);

}  // namespace signcraft
