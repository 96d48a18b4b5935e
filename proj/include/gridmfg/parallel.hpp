#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace gridmfg {

// Worker count: min(hardware, GRIDMFG_THREADS). Results never depend on it;
// work items write to disjoint preallocated slots and reductions run serially.
inline int worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("GRIDMFG_THREADS")) {
        long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    return static_cast<int>(hw);
}

// Static chunking by index; fn(i) must touch only item i's state.
inline void parallel_for(int n_items, const std::function<void(int)>& fn) {
    int workers = std::min(worker_count(), std::max(n_items, 1));
    if (workers <= 1 || n_items <= 1) {
        for (int i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < n_items; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace gridmfg
