#include "otom/threads.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace otom {

int effective_workers(int requested) {
    if (requested > 0) return requested;
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("OTOM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

void parallel_chunks(std::size_t n, int workers,
                     const std::function<void(std::size_t, std::size_t, int)>& fn) {
    if (n == 0) return;
    workers = std::max(1, workers);
    const auto w = static_cast<std::size_t>(workers);
    if (w <= 1 || n == 1) {
        fn(0, n, 0);
        return;
    }
    const std::size_t chunk = (n + w - 1) / w;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t k = 0; k < w; ++k) {
        const std::size_t begin = k * chunk;
        if (begin >= n) break;
        const std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back([&fn, begin, end, k] { fn(begin, end, static_cast<int>(k)); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace otom
