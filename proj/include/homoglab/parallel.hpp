#pragma once

// Per-sample work pool with ordered results. Each sample's outcome is stored
// at its own index, so reductions done afterwards in index order do not depend
// on scheduling or thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "homoglab/error.hpp"

namespace homoglab {

template <class T>
struct SampleOutcome {
  std::optional<T> value;
  std::string error;
};

inline unsigned default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1u : n;
}

template <class T, class F>
std::vector<SampleOutcome<T>> run_samples(std::size_t n, unsigned threads, F&& work) {
  std::vector<SampleOutcome<T>> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= n) return;
      try {
        out[s].value.emplace(work(s));
      } catch (const std::exception& e) {
        out[s].error = e.what();
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (t == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace homoglab
