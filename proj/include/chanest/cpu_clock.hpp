#pragma once

#include <ctime>

namespace chanest {

/// CPU time consumed by the calling thread, in seconds. Monotone within a
/// thread; differences are immune to wall-clock scheduling noise.
inline double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

}  // namespace chanest
