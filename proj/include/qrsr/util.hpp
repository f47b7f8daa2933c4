#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace qrsr {

// Applies fn to every index in [0, count) across `jobs` threads. Results
// land in a preallocated slot per index, so the output order (and therefore
// every downstream byte) is independent of the thread count.
template <class Result, class Fn>
std::vector<Result> parallel_map(size_t count, int jobs, Fn&& fn) {
    std::vector<Result> results(count);
    if (jobs <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
            results[i] = fn(i);
    };
    std::vector<std::thread> pool;
    const int n = std::min<size_t>(jobs, count);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

// Worker count: explicit argument wins, then the QRSR_JOBS environment
// variable, then single threaded.
inline int resolve_jobs(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QRSR_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

} // namespace qrsr
