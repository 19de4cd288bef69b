// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mfchain {

/// Deterministic striped map-reduce over item indices [0, n_items).
///
/// Stripe s accumulates items {i : i % n_stripes == s} in increasing order;
/// worker w owns stripes {s : s % workers == w}. The caller merges the
/// returned stripes in stripe order, so the floating-point result is
/// independent of the worker count.
template <class Acc, class Work>
std::vector<Acc> striped_map_reduce(long n_items, int workers, int n_stripes,
                                    const Acc& prototype, Work&& work) {
  if (workers < 1) workers = 1;
  if (n_stripes < workers) n_stripes = workers;
  std::vector<Acc> stripes(n_stripes, prototype);
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  auto run_worker = [&](int w) {
    try {
      for (int s = w; s < n_stripes; s += workers)
        for (long i = s; i < n_items; i += n_stripes) work(i, stripes[s]);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return stripes;
}

}  // namespace mfchain
