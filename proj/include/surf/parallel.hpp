#pragma once

#include <cstddef>
#include <functional>

namespace surf {

/// Calls body(i) for i in [0, n) on up to `threads` workers. Indices are
/// split into contiguous blocks; body must only write to slots owned by i.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)> &body);

} // namespace surf
