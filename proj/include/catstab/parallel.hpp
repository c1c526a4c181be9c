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

#ifndef CATSTAB_PARALLEL_HPP
#define CATSTAB_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace catstab {

// Process-wide worker count used by parallel loops.  0 restores the default
// (hardware concurrency).  Returns the value actually in effect.
int set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n) on `threads` workers (0 = configured count).
// Work is split into contiguous index chunks, one per worker, so results
// written by index are bitwise identical regardless of the worker count.
// Exceptions thrown by the body are collected and the first one rethrown.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body,
                  int threads = 0);

}  // namespace catstab

#endif  // CATSTAB_PARALLEL_HPP
