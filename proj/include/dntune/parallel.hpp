#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace dntune {

// Runs chunk_fn(begin, end) over a static partition of [0, n). Workers never
// share output slots, so results are identical for any thread count.
inline void parallel_chunks(std::size_t n, unsigned threads,
                            const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
    if (n == 0) return;
    const unsigned t = std::min<std::size_t>(std::max(1u, threads), n);
    if (t == 1) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    std::vector<std::exception_ptr> errors(t);
    const std::size_t base = n / t, rem = n % t;
    std::size_t begin = 0;
    for (unsigned i = 0; i < t; ++i) {
        const std::size_t len = base + (i < rem ? 1 : 0);
        pool.emplace_back([&, i, begin, len] {
            try {
                chunk_fn(begin, begin + len);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
        begin += len;
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Worker count resolution: DNTUNE_WORKERS env var > explicit request > hardware.
inline unsigned resolve_workers(unsigned requested) {
    if (const char* env = std::getenv("DNTUNE_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    if (requested >= 1) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? hw : 1;
}

}  // namespace dntune
