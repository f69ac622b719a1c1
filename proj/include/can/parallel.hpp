#pragma once

namespace can {

// Worker-thread cap for the data-parallel kernels. Results are bit-identical
// for any thread count: parallel loops write disjoint rows, and every
// floating-point reduction combines per-row partials in row index order.
void set_threads(int n);
int threads();

} // namespace can
