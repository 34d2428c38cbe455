#include "pcgen/threadpool.hpp"

#include <memory>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pcgen {

namespace {
std::mutex g_pool_mu;
std::unique_ptr<ThreadPool> g_pool;
int g_requested_threads = 0;

// Training allocates and frees megabyte-scale activation tensors every step;
// keeping them on the heap instead of round-tripping through mmap removes a
// large page-fault cost.
void tune_allocator() {
#if defined(__GLIBC__)
    static bool done = false;
    if (!done) {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        done = true;
    }
#endif
}
}  // namespace

ThreadPool& global_pool() {
    std::lock_guard<std::mutex> lk(g_pool_mu);
    if (!g_pool) {
        tune_allocator();
        int t = g_requested_threads > 0 ? g_requested_threads
                                        : static_cast<int>(std::thread::hardware_concurrency());
        g_pool = std::make_unique<ThreadPool>(t < 1 ? 1 : t);
    }
    return *g_pool;
}

void set_global_threads(int threads) {
    std::lock_guard<std::mutex> lk(g_pool_mu);
    g_requested_threads = threads;
    g_pool.reset();
}

}  // namespace pcgen
