#pragma once

#include <cstddef>
#include <functional>

namespace sdekit {

/// Calls body(i) for every i in [0, count) on up to `threads` workers.
/// Indices are handed out dynamically, so body must only write state owned
/// by index i. The first exception thrown by any call is rethrown here after
/// all workers have stopped.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Hardware concurrency, at least 1.
unsigned default_thread_count();

}  // namespace sdekit
