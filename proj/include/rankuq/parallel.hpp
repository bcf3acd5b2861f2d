// Copyright 2026 The RankUQ Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RANKUQ_PARALLEL_HPP_
#define RANKUQ_PARALLEL_HPP_

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace rankuq {

// Thread budget for internal parallelism. RANKUQ_THREADS, when set, is the
// thread count (>= 1); otherwise the hardware concurrency. Results never
// depend on the budget.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("RANKUQ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    return v >= 1 ? static_cast<unsigned>(v) : 1u;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

// Runs fn(i) for i in [0, n). Work is split statically; callers must write
// results into per-index slots so the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  if (n <= 0) return;
  const unsigned budget = thread_budget();
  if (budget <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers = std::min<unsigned>(budget, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = static_cast<int>(w); i < n;
           i += static_cast<int>(workers)) {
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// Fixed shard count for likelihood reductions. Shard boundaries depend only
// on the record count and shard partials are combined in ascending shard
// order, so sums are bit-stable for any thread count.
inline constexpr int kReductionShards = 16;

inline std::pair<int, int> shard_range(int n, int shard) {
  const int shards = kReductionShards;
  const int base = n / shards;
  const int rem = n % shards;
  const int begin = shard * base + std::min(shard, rem);
  const int len = base + (shard < rem ? 1 : 0);
  return {begin, begin + len};
}

}  // namespace rankuq

#endif  // RANKUQ_PARALLEL_HPP_
