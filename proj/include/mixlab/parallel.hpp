#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace mixlab {

/// Run fn(shard) for shard = 0..n_shards-1 on up to `threads` workers.
/// Shard work must be independent; results keyed by shard index stay
/// deterministic regardless of the thread count.
template <class Fn>
void parallel_shards(std::size_t n_shards, int threads, Fn&& fn) {
  if (threads <= 1 || n_shards <= 1) {
    for (std::size_t s = 0; s < n_shards; ++s) fn(s);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= n_shards) return;
      fn(s);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n_shards);
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

} // namespace mixlab
