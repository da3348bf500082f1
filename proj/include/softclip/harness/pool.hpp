#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace softclip::harness {

/// Evaluate fn(0..n-1) on up to `workers` threads. Results are stored by index,
/// so the output does not depend on scheduling. The first exception (by index)
/// is rethrown after all workers stop.
template <class R>
std::vector<R> parallel_map(std::size_t n, std::size_t workers, const std::function<R(std::size_t)>& fn) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t t = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(t);
    for (std::size_t i = 0; i < t; ++i) threads.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace softclip::harness
