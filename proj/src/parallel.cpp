#include "tumorcast/parallel.hpp"

#include <atomic>
#include <stdexcept>

namespace tumorcast {

namespace {
std::atomic<int> g_workers{1};
}

int worker_count() { return g_workers.load(); }

void set_worker_count(int n) {
    if (n < 1) throw std::invalid_argument("set_worker_count: n must be >= 1");
    g_workers.store(n);
}

}  // namespace tumorcast
