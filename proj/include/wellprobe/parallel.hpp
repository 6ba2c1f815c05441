#pragma once

#include <cstddef>
#include <functional>

namespace wellprobe {

// Thread count used when parallel_for is called with workers = 0.
unsigned default_workers();
void set_default_workers(unsigned workers);

// Runs body(i) for every i in [0, n). Work items must write disjoint outputs.
// If bodies throw, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers = 0);

}  // namespace wellprobe
