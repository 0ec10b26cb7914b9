#pragma once

#include <cstddef>
#include <functional>

namespace kapcpd {

/// Worker count: the hint if positive, else KAPCPD_THREADS, else hardware
/// concurrency. Always capped by KAPCPD_THREADS when that is set.
std::size_t resolve_workers(std::size_t hint = 0);

/// Runs body(i) for i in [0, count) on up to `workers` threads. Indices are
/// handed out in contiguous blocks; body must only write to slots owned by i.
/// The first exception thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace kapcpd
