#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace descforge {

/// Worker count used by the tiled loops. DESCFORGE_THREADS caps it; unset means
/// hardware concurrency.
inline int thread_count()
{
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("DESCFORGE_THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap >= 1)
                return std::min(hw, cap);
        } catch (...) {
        }
    }
    return hw;
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks never
/// overlap, so a body that writes only inside its chunk is deterministic
/// regardless of thread count.
template <typename Body>
void parallel_chunks(std::int64_t n, Body&& body, int threads = thread_count())
{
    if (n <= 0)
        return;
    threads = static_cast<int>(std::clamp<std::int64_t>(threads, 1, n));
    if (threads == 1) {
        body(std::int64_t{0}, n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        std::int64_t begin = n * t / threads;
        std::int64_t end = n * (t + 1) / threads;
        workers.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& w : workers)
        w.join();
}

/// Uniform double in [0, 1) built from the top 53 bits; unlike
/// std::uniform_real_distribution this is identical on every standard library.
inline double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n)
{
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// Standard normal via Box-Muller on uniform01.
inline double standard_normal(std::mt19937_64& rng)
{
    double u1 = 0.0;
    while (u1 <= 0.0)
        u1 = uniform01(rng);
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace descforge
