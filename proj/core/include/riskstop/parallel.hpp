#pragma once

#include <cstddef>
#include <functional>

namespace riskstop {

/// Worker count for parallel fan-out: RISKSTOP_THREADS when set to a
/// positive integer, otherwise the machine's hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for every i in [0, n), handing indices to workers on demand;
/// callers write results into per-index slots and reduce afterwards, so
/// outcomes never depend on the worker count. Calls made from inside a
/// worker run inline. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace riskstop
