#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace monoloc::par {

// Global execution switch. Kernels write one slot per index and never reduce
// across threads, so serial and parallel runs produce identical bytes; the
// switch exists so tests and the benchmark can compare the two paths.
inline bool& parallel_enabled() {
    static bool on = true;
    return on;
}

inline void set_parallel(bool on) { parallel_enabled() = on; }

// Honors MONOLOC_THREADS once per process.
inline void init_threads() {
#ifdef _OPENMP
    static bool done = false;
    if (done) return;
    done = true;
    if (const char* s = std::getenv("MONOLOC_THREADS")) {
        int n = std::atoi(s);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

template <class Fn>
void for_index(std::int64_t n, Fn&& fn) {
    init_threads();
    if (parallel_enabled()) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::int64_t i = 0; i < n; ++i) fn(i);
    } else {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
    }
}

struct SerialGuard {
    bool saved;
    SerialGuard() : saved(parallel_enabled()) { set_parallel(false); }
    ~SerialGuard() { set_parallel(saved); }
};

} // namespace monoloc::par
