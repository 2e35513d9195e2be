#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace macrodim {

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on n and chunk_size, never on the thread count,
// so per-chunk results can be reduced in index order for bit-identical output
// on any machine.
template <typename Fn>
void for_chunks(std::int64_t n, std::int64_t chunk_size, Fn&& fn) {
    if (n <= 0) return;
    const std::int64_t n_chunks = (n + chunk_size - 1) / chunk_size;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned n_threads = static_cast<unsigned>(
        std::min<std::int64_t>(n_chunks, static_cast<std::int64_t>(hw)));
    if (n_threads <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            while (true) {
                const std::int64_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace macrodim
