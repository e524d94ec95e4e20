#pragma once

#include <cstddef>
#include <functional>

namespace rflab {

// Thread-count hint used by parallel_for.  Resolution order: explicit
// set_thread_hint() value, else the RFA_THREADS environment variable, else 1.
// The hint only affects wall-clock time: every parallel loop writes to
// disjoint pre-allocated slots keyed by item index, so results are identical
// for any value.
void set_thread_hint(int threads);
int thread_hint();

// Runs fn(i) for i in [0, count) across the hinted number of threads.
// fn must only write to state owned by item i.  Exceptions propagate.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace rflab
