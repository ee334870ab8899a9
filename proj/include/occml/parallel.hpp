#pragma once

#include <cstddef>
#include <functional>

namespace occml {

// Worker count: OCCML_THREADS if set and positive, otherwise the hardware
// concurrency. set_thread_count overrides both (0 restores the default).
int thread_count();
void set_thread_count(int threads);

// Runs body(i) for i in [0, n). Items are assigned to workers statically and
// callers write results into per-item slots, so output never depends on the
// worker count. Nested calls from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace occml
