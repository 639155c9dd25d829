#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace spinlets {

/// Worker count used by parallel sections. 0 means hardware concurrency.
void set_thread_limit(unsigned threads);
unsigned thread_limit();

/// Run body(i) for i in [0, count) over contiguous chunks. Each index is visited
/// exactly once, so any per-index output is independent of the thread count.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(thread_limit(), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * chunk;
                const std::size_t hi = std::min(count, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace spinlets
