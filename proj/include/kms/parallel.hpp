#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kms {

/// Upper bound on worker threads used by the algorithms. 0 means
/// std::thread::hardware_concurrency().
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Runs body(begin, end) over contiguous blocks of [0, n). Blocks are
/// disjoint, so bodies that only write their own index range give results
/// independent of the worker count. The first exception thrown by any block
/// is rethrown on the calling thread.
void parallel_for_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace kms
