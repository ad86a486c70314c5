#include "simcount/threading.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace simcount {

void configure_threads_from_env() {
  omp_set_max_active_levels(1);
  const char* cap = std::getenv("SIMCOUNT_THREADS");
  if (cap == nullptr || *cap == '\0') return;
  try {
    const int n = std::stoi(cap);
    if (n >= 1) omp_set_num_threads(std::min(n, omp_get_num_procs()));
  } catch (const std::exception&) {
    // ignore malformed values, keep the runtime default
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace simcount
