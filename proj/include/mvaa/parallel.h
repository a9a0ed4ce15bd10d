#pragma once

#include <cstddef>
#include <functional>

namespace mvaa {

// Worker count: hardware concurrency, capped by the MVAA_THREADS environment
// variable when it holds a positive integer.
unsigned worker_count();

// Calls fn(i) for every i in [0, n). Each index is visited exactly once; fn
// must only write state owned by its index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mvaa
