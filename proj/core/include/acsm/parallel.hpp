#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace acsm {

// Work is cut into fixed-size blocks that threads claim from a shared counter.
// Block boundaries depend only on n, so any per-block outputs (and reductions
// over them done in block order) are identical for every thread count.
inline constexpr std::size_t kParallelBlock = 4096;

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void parallel_blocks(std::size_t n, int threads,
                            const std::function<void(std::size_t block_index,
                                                     std::size_t begin,
                                                     std::size_t end)>& fn) {
  if (n == 0) return;
  std::size_t n_blocks = (n + kParallelBlock - 1) / kParallelBlock;
  threads = std::min<std::size_t>(resolve_threads(threads), n_blocks);
  if (threads <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
      fn(b, b * kParallelBlock, std::min(n, (b + 1) * kParallelBlock));
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      fn(b, b * kParallelBlock, std::min(n, (b + 1) * kParallelBlock));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

// Neumaier-compensated accumulator; addition order must still be fixed by the
// caller when bitwise reproducibility matters.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace acsm
