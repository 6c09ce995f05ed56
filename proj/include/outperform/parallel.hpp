#pragma once

#include <cstddef>
#if defined(_OPENMP)
#include <omp.h>
#endif

namespace outperform::parallel {

inline int max_threads()
{
#if defined(_OPENMP)
    return ::omp_get_max_threads();
#else
    return 1;
#endif
}

inline bool in_parallel()
{
#if defined(_OPENMP)
    return ::omp_in_parallel();
#else
    return false;
#endif
}

/// Caps the worker count used by every kernel that does not receive an
/// explicit thread count. Zero or negative leaves the runtime default.
inline void set_thread_cap(int n_threads)
{
#if defined(_OPENMP)
    if (n_threads > 0) ::omp_set_num_threads(n_threads);
#else
    (void)n_threads;
#endif
}

/// Static-schedule loop over [0, n). Each iteration must write only to its own
/// output slot; callers reduce afterwards in index order so results do not
/// depend on the thread count.
template <class F>
void for_each_index(std::size_t n, int n_threads, F&& f)
{
    const int threads = n_threads > 0 ? n_threads : max_threads();
    if (threads <= 1 || in_parallel() || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
}

} // namespace outperform::parallel
