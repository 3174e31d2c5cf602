// SPDX-License-Identifier: Apache-2.0
#include "mlms/pipeline/util.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace mlms::pipeline {

namespace {
std::mutex g_log_mutex;
std::atomic<bool> g_quiet{false};
}  // namespace

void log_line(const std::string& message) {
  if (g_quiet.load()) return;
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << message << '\n';
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t worker_count(std::size_t n, std::size_t threads) {
  return std::max<std::size_t>(1, std::min(resolve_threads(threads), n));
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = worker_count(n, threads);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = n;
  std::exception_ptr error;
  auto run = [&](std::size_t worker) {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i, worker);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mlms::pipeline
