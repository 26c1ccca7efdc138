// Deterministic fork-join helper. Work is split into fixed contiguous chunks
// so results land in caller-owned slots; reductions stay in index order and
// output bytes do not depend on the job count.
#pragma once

#include <cstdint>
#include <functional>

namespace qplab {

// 0 means hardware concurrency.
int effective_jobs(int requested);

// Calls body(begin, end) on disjoint ranges covering [0, n). With jobs == 1
// (or tiny n) runs inline on the calling thread.
void parallel_for(std::int64_t n, int jobs,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace qplab
