#pragma once

#include <cstddef>
#include <functional>

namespace gmra {

// Worker count: set_thread_count() if called, else GMRA_THREADS, else hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);  // 0 restores the default

// Runs fn(i) for i in [begin, end) over contiguous chunks. The first exception thrown by
// any worker is rethrown on the calling thread.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace gmra
