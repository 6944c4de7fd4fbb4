#include "kms/parallel.hpp"

#include <atomic>

namespace kms {

namespace {
std::atomic<std::size_t> g_workers{0};
}

void set_worker_count(std::size_t workers) { g_workers.store(workers); }

std::size_t worker_count() {
    const std::size_t w = g_workers.load();
    if (w != 0) return w;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        body(0, n);
        return;
    }
    // Many more blocks than workers keeps uneven rows (e.g. cells of
    // different sizes) balanced.
    const std::size_t blocks = std::min(n, workers * 8);
    const std::size_t chunk = (n + blocks - 1) / blocks;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            const std::size_t begin = b * chunk;
            if (begin >= n) return;
            try {
                body(begin, std::min(n, begin + chunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) threads.emplace_back(run);
    run();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace kms
