#pragma once

namespace styler {

/// Caps the number of worker threads used by data-parallel kernels.
/// n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

}  // namespace styler
