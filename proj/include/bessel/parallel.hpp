#pragma once

#include <cstddef>
#include <functional>

namespace bessel {

/// Worker count used by the library's parallel loops (default 1).
void set_thread_count(unsigned n);
unsigned thread_count() noexcept;

/// Runs body(i) for i in [0, n), split into contiguous chunks across
/// thread_count() threads. Iterations must be independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace bessel
