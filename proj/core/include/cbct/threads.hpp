#pragma once

namespace cbct {

// Worker count for parallel regions: explicit cap if set, else the
// CBCT_THREADS environment variable, else the OpenMP default.
int thread_count();
void set_thread_cap(int n);  // n <= 0 clears the cap

}  // namespace cbct
