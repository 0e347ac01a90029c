#include "evarfluid/parallel.hpp"

#include <cstdlib>
#include <string>

namespace evf::par {

void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int configure_from_env() {
  if (const char* s = std::getenv("EVARFLUID_THREADS")) {
    try {
      set_max_threads(std::stoi(s));
    } catch (const std::exception&) {
      // unparseable value: keep the default
    }
  }
  return max_threads();
}

}  // namespace evf::par
