#pragma once

namespace ussci {

/// Sets the OpenMP worker count used by every kernel. 1 gives the deterministic mode.
void set_num_threads(int n);
int num_threads();

}  // namespace ussci
