#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace wkam {

// Static-partition parallel map over [0, n). Each index writes only its own
// outputs, so the result is independent of the thread count.
template <typename F>
void parallel_for(int n, F&& body) {
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers = std::max(1, static_cast<int>(std::min<unsigned>(hw, 8)));
    if (workers == 1 || n < 2 * workers) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace wkam
