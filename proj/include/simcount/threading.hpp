#pragma once

namespace simcount {

// Applies the SIMCOUNT_THREADS cap (if set) to the OpenMP runtime. Safe to
// call more than once.
void configure_threads_from_env();
int max_threads();

}  // namespace simcount
