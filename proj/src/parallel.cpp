// Copyright 2026 The Catstab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "catstab/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace catstab {

namespace {

std::atomic<int> g_threads{0};

int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int set_thread_count(int n) {
  if (n < 0) n = 0;
  g_threads.store(n);
  return thread_count();
}

int thread_count() {
  int n = g_threads.load();
  return n > 0 ? n : hardware_threads();
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body,
                  int threads) {
  if (n <= 0) return;
  int workers = threads > 0 ? threads : thread_count();
  if (workers > n) workers = static_cast<int>(n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto run_chunk = [&](std::int64_t lo, std::int64_t hi) {
    try {
      for (std::int64_t i = lo; i < hi; ++i) body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  // Contiguous chunks, remainder spread over the leading workers; the
  // index->chunk map depends only on (n, workers).
  std::int64_t base = n / workers, extra = n % workers;
  std::vector<std::int64_t> bounds(static_cast<std::size_t>(workers) + 1, 0);
  for (int w = 0; w < workers; ++w)
    bounds[w + 1] = bounds[w] + base + (w < extra ? 1 : 0);

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w)
    pool.emplace_back(run_chunk, bounds[w], bounds[w + 1]);
  run_chunk(bounds[0], bounds[1]);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace catstab
