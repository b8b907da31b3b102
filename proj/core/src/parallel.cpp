#include "capbound/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace capbound {

int max_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("CAPBOUND_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& chunk_fn,
                  int threads) {
    if (n <= 0) return;
    int t = threads > 0 ? threads : max_threads();
    t = static_cast<int>(std::min<std::int64_t>(t, n));
    if (t <= 1) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    std::exception_ptr err;
    std::mutex err_mu;
    const std::int64_t chunk = (n + t - 1) / t;
    for (int i = 0; i < t; ++i) {
        const std::int64_t b = i * chunk;
        const std::int64_t e = std::min<std::int64_t>(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            try {
                chunk_fn(b, e);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace capbound
