#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wf {

/// Runs fn(k) for k in [0, n) on up to `workers` threads. Work items are
/// claimed through an atomic counter; callers write results into slots keyed
/// by k, so the outcome does not depend on scheduling. The exception of the
/// lowest failing index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (n == 0) {
        return;
    }
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t k = 0; k < n; ++k) {
            fn(k);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_index = n;
    std::exception_ptr err;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
                    try {
                        fn(k);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        if (k < err_index) {
                            err_index = k;
                            err = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (err) {
        std::rethrow_exception(err);
    }
}

/// Hardware concurrency with a floor of one.
inline unsigned default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace wf
