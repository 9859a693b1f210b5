#pragma once
// Deterministic work-sharing: parallel_for partitions [begin, end) into
// contiguous blocks, one per worker. Callers must write only to their own
// slots and reduce in index order afterwards, so results are independent of
// the thread count.

#include <functional>

namespace fragsim {

int parallel_threads();
void set_parallel_threads(int n);  // n >= 1

// body(index, thread_id); thread_id in [0, parallel_threads())
void parallel_for(int begin, int end, const std::function<void(int, int)>& body);

}  // namespace fragsim
