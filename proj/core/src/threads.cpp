#include "cbct/threads.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>

namespace cbct {

namespace {
std::atomic<int> g_cap{0};
}

void set_thread_cap(int n) { g_cap.store(n > 0 ? n : 0); }

int thread_count() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("CBCT_THREADS")) {
    const int e = std::atoi(env);
    if (e > 0 && e < n) n = e;
  }
  const int cap = g_cap.load();
  if (cap > 0 && cap < n) n = cap;
  return n < 1 ? 1 : n;
}

}  // namespace cbct
