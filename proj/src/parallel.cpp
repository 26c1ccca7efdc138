#include "qplab/parallel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace qplab {

int effective_jobs(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::int64_t n, int jobs,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  int j = effective_jobs(jobs);
  j = static_cast<int>(std::min<std::int64_t>(j, n));
  if (j <= 1 || n < 256) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(j);
  std::int64_t chunk = (n + j - 1) / j;
  for (int k = 0; k < j; ++k) {
    std::int64_t b = k * chunk;
    std::int64_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace qplab
