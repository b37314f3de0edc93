#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace csskit {

/// Worker count used by restart, trial and Monte Carlo loops. Defaults to
/// the CSSKIT_THREADS environment variable, else the hardware concurrency.
int num_threads();
void set_num_threads(int n);

/// Runs fn(i) for i in [0, n) on up to num_threads() threads. Each index is
/// processed exactly once; the first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Seed for sub-stream `stream` of `base`; stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace csskit
