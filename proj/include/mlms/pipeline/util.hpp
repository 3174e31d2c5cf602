// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace mlms::pipeline {

/// Progress and per-clip failure messages go to stderr unless silenced.
void log_line(const std::string& message);
void set_quiet(bool quiet);

/// Resolves a thread-count setting; 0 means hardware concurrency.
std::size_t resolve_threads(std::size_t requested);

/// Number of workers parallel_for uses for n items.
std::size_t worker_count(std::size_t n, std::size_t threads);

/// Runs body(i, worker) for i in [0, n) on worker_count(n, threads) workers,
/// worker in [0, worker_count). Work is claimed dynamically, so body must own
/// its outputs by index. The exception of the lowest failing index is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace mlms::pipeline
