#pragma once

#include <cstddef>
#include <functional>

namespace stokes {

void set_num_threads(int n);
int num_threads();

// Runs body(i) for i in [0, count). Each index is processed exactly once and
// callers write into per-index slots, so output never depends on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace stokes
