#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sdfvr {

inline int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Splits [0, count) into contiguous chunks, one worker thread per chunk.
// Chunk boundaries depend only on (count, threads), so a body that writes
// disjoint per-index outputs produces identical results for any thread count.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    if (threads <= 0) threads = hardware_threads();
    if (threads == 1 || count <= 1) {
        body(0, count);
        return;
    }
    const std::size_t n_chunks = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    const std::size_t chunk = (count + n_chunks - 1) / n_chunks;
    std::vector<std::thread> pool;
    pool.reserve(n_chunks);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace sdfvr
