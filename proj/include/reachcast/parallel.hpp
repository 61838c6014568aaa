/*
 * Copyright 2026 The reachcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace reachcast {

/// Runs body(begin, end) over contiguous chunks of [0, n) on `workers` threads.
///
/// Chunk boundaries depend only on n and `chunks`, never on the worker count, so a
/// body that writes only into per-chunk or per-index slots produces identical output
/// for any number of workers. The first exception thrown by any chunk is rethrown.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunks, unsigned workers, Body&& body) {
  if (n == 0) return;
  chunks = std::clamp<std::size_t>(chunks, 1, n);
  auto chunk_range = [&](std::size_t c) {
    return std::pair{c * n / chunks, (c + 1) * n / chunks};
  };
  if (workers <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      auto [b, e] = chunk_range(c);
      body(b, e);
    }
    return;
  }
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += threads) {
        try {
          auto [b, e] = chunk_range(c);
          body(b, e);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// parallel_chunks with one chunk per index: body(i) for every i in [0, n).
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  parallel_chunks(n, workers <= 1 ? 1 : std::size_t{workers} * 8, workers,
                  [&](std::size_t b, std::size_t e) {
                    for (std::size_t i = b; i < e; ++i) body(i);
                  });
}

}  // namespace reachcast
