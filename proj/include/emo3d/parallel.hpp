#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace emo3d {

// Global worker cap, set once by the CLI --jobs flag. 0 = use all cores.
void set_max_jobs(int jobs);
int max_jobs();

// Effective thread count for a loop of n iterations.
int threads_for(std::int64_t n);

// Static-schedule parallel loop. body(i) must be independent per index and
// write only to its own slot; that keeps every caller deterministic
// regardless of thread count.
template <typename F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
    const int k = threads_for(n);
    if (k > 1) {
#pragma omp parallel for num_threads(k) schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        body(i);
    }
}

} // namespace emo3d
