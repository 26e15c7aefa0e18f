#pragma once

#include <cstddef>
#include <functional>

namespace strata {

// Worker count: a positive request wins, then STRATA_THREADS, then hardware concurrency.
int resolve_threads(int requested = 0);
void set_default_threads(int threads);
int default_threads();

// Runs body(i) for i in [0, count). Each index is handled exactly once, so results written
// per index do not depend on the schedule. The first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace strata
