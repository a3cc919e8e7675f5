#pragma once

#include <cstddef>
#include <functional>

namespace lightray {

// Worker count: hardware concurrency, capped by LIGHTRAY_THREADS when set.
unsigned worker_count();

// Calls body(i) for i in [0, n). Each index should write only its own slot so the
// result does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lightray
