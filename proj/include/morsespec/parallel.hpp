#pragma once

// Index-ordered parallel map over std::thread. Results land in slot i whatever
// the schedule, so reductions over the output are independent of the worker count.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace morsespec {

/// Worker count from MORSESPEC_WORKERS, else the hardware concurrency (at least 1).
inline int default_workers()
{
    if (const char* env = std::getenv("MORSESPEC_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1)
                return n;
        } catch (const std::exception&) {
        }
    }
    return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

/// out[i] = fn(i) for i < n. The first exception (lowest index) is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, int workers = 0) -> std::vector<decltype(fn(std::size_t{}))>
{
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    if (workers <= 0)
        workers = default_workers();
    const auto threads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = fn(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t k = 0; k < threads; ++k)
        pool.emplace_back(work);
    for (auto& th : pool)
        th.join();
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

} // namespace morsespec
