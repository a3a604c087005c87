#include "emo3d/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace emo3d {

namespace {
std::atomic<int> g_max_jobs{0};
}

void set_max_jobs(int jobs) {
    g_max_jobs.store(jobs < 0 ? 0 : jobs);
}

int max_jobs() {
    return g_max_jobs.load();
}

int threads_for(std::int64_t n) {
#ifdef _OPENMP
    int hw = omp_get_max_threads();
    const int cap = g_max_jobs.load();
    if (cap > 0) {
        hw = std::min(hw, cap);
    }
    if (n < 2) {
        return 1;
    }
    return static_cast<int>(std::min<std::int64_t>(hw, n));
#else
    (void)n;
    return 1;
#endif
}

} // namespace emo3d
