#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace jmmle {

/// Worker count to use: `requested` when positive, otherwise the JMMLE_WORKERS
/// environment variable, otherwise the hardware concurrency (at least 1).
int resolve_workers(int requested = 0);

/// Runs f(i) for i in [0, count) on up to `workers` threads. Tasks claim
/// indices from a shared counter, so callers that write results into slot i
/// get the same output for any schedule. The exception of the lowest failing
/// index is rethrown after all threads join.
template <class F>
void parallel_for(std::size_t count, int workers, F&& f) {
    if (count == 0) return;
    const auto nthreads = static_cast<std::size_t>(workers < 1 ? 1 : workers);
    if (nthreads == 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t spawn = (nthreads < count ? nthreads : count) - 1;
    for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace jmmle
