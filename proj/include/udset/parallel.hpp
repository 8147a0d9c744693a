#pragma once

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace udset {

// Worker count comes from UDSET_THREADS when set (0 or unset falls back to
// hardware concurrency). Work is always split into a caller-chosen number of
// shards keyed only by shard index, so results cannot depend on this value.
inline int thread_count() {
  if (const char* env = std::getenv("UDSET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0)
      throw std::runtime_error(std::string("UDSET_THREADS: not a count: ") + env);
    if (v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Evaluates fn(shard) for shard = 0..shards-1 and returns results in shard
// order. fn must be deterministic in the shard index alone.
template <class T, class Fn>
std::vector<T> parallel_shards(int shards, Fn&& fn) {
  std::vector<T> out(static_cast<size_t>(shards));
  const int workers = std::min(thread_count(), shards);
  if (workers <= 1) {
    for (int s = 0; s < shards; ++s) out[static_cast<size_t>(s)] = fn(s);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int s = next.fetch_add(1);
        if (s >= shards || failed.load()) return;
        try {
          out[static_cast<size_t>(s)] = fn(s);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(err);
  return out;
}

}  // namespace udset
