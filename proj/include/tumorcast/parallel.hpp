#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace tumorcast {

/// Process-wide worker count. 1 (the default) runs everything inline,
/// which is the determinism baseline.
int worker_count();
void set_worker_count(int n);

/// Static block partition of [0, n) over the worker threads.
/// fn(begin, end, thread_index); partition depends only on n and the
/// worker count, so results are reproducible for a fixed configuration.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    int workers = std::min(worker_count(), std::max(n, 1));
    if (workers <= 1 || n <= 1) {
        fn(0, n, 0);
        return;
    }
    std::vector<std::thread> threads;
    int chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        int begin = t * chunk;
        int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&fn, begin, end, t] { fn(begin, end, t); });
    }
    for (auto& th : threads) th.join();
}

}  // namespace tumorcast
