// SPDX-License-Identifier: Apache-2.0
//
// isacsim — deterministic ray-traced channel simulation and radio sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Minimal fork-join helper. Work items are indexed, each worker owns a
// disjoint index stride, and callers merge per-index results in index order,
// so output never depends on the worker count. ISACSIM_THREADS overrides the
// hardware default.

#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace isac {

inline int worker_count() {
    if (const char* env = std::getenv("ISACSIM_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

/// Run fn(i) for i in [0, count) on up to worker_count() threads.
/// fn must only write state owned by index i. The first exception thrown by
/// any worker is rethrown on the calling thread after all workers join.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    int workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};

    auto body = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                bool expected = false;
                if (failed.compare_exchange_strong(expected, true))
                    error = std::current_exception();
                break;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(error);
}

} // namespace isac
