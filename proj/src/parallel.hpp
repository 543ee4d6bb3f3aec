#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace iondetect::detail {

// Runs fn(begin, end, worker) over contiguous chunks of [0, count).
template <class Fn>
void parallel_chunks(std::uint64_t count, unsigned threads, Fn&& fn)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(count, 1)));
    if (threads == 1) {
        fn(std::uint64_t{0}, count, 0u);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&, w] { fn(count * w / threads, count * (w + 1) / threads, w); });
}

}  // namespace iondetect::detail
