#pragma once

#include <algorithm>
#include <future>
#include <vector>

namespace diegesis {

// Evaluates fn(0..n-1) with at most `width` calls in flight and returns the
// results in index order, so output never depends on scheduling.
template <typename Fn>
auto parallel_map(std::size_t n, std::size_t width, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<T> out;
  out.reserve(n);
  width = std::max<std::size_t>(1, width);
  if (width == 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  for (std::size_t base = 0; base < n; base += width) {
    const std::size_t end = std::min(n, base + width);
    std::vector<std::future<T>> batch;
    for (std::size_t i = base; i < end; ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace diegesis
