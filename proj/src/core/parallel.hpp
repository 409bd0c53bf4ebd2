// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace losa {

// Runs fn(i) for i in [0, n). Worker count is min(n, hardware threads),
// capped by the LOSA_THREADS environment variable. Callers must write to
// disjoint slots; results are then deterministic regardless of scheduling.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

size_t worker_limit();

} // namespace losa
