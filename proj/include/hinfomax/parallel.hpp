#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace hinfomax {

/// Column-chunk width used by every reduction. Chunk boundaries never depend
/// on the worker count, which is what keeps results bitwise reproducible.
inline constexpr std::int64_t kReduceChunk = 2048;

/// Worker count from HINFOMAX_THREADS, defaulting to 1.
int default_threads();

/// Evaluates `map(begin, end)` over fixed chunks of [0, n) on up to `threads`
/// workers, then folds the partial results strictly in chunk order.
template <class T, class Map, class Fold>
T chunked_reduce(std::int64_t n, int threads, Map map, T init, Fold fold) {
    const std::int64_t chunks = std::max<std::int64_t>(1, (n + kReduceChunk - 1) / kReduceChunk);
    std::vector<T> partial(static_cast<std::size_t>(chunks));
    auto run_chunk = [&](std::int64_t c) {
        const std::int64_t begin = c * kReduceChunk;
        const std::int64_t end = std::min(n, begin + kReduceChunk);
        partial[static_cast<std::size_t>(c)] = map(begin, end);
    };

    const int workers = static_cast<int>(std::clamp<std::int64_t>(threads, 1, chunks));
    if (workers == 1) {
        for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::atomic<std::int64_t> next{0};
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::int64_t c = next++; c < chunks; c = next++) run_chunk(c);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                    next = chunks;
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    T acc = std::move(init);
    for (auto& p : partial) fold(acc, p);
    return acc;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. fn must only write
/// to slots owned by i.
template <class Fn>
void parallel_for(std::int64_t n, int threads, Fn fn) {
    const int workers = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(n, 1)));
    if (workers == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::int64_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
                next = n;
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace hinfomax
