#ifndef GRIT_PARALLEL_H_
#define GRIT_PARALLEL_H_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

namespace grit {

// Applies fn to every item on up to `workers` threads. Results come back in
// input order regardless of the worker count. The first exception thrown by
// any worker is rethrown after all workers finish.
template <class In, class Fn>
auto parallel_map(std::span<const In> items, int workers, Fn fn)
    -> std::vector<std::invoke_result_t<Fn&, const In&>> {
  using Out = std::invoke_result_t<Fn&, const In&>;
  std::vector<Out> out(items.size());
  const std::size_t n = items.size();
  const std::size_t threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(items[i]);
    return out;
  }

  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    const std::size_t block = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        const std::size_t begin = t * block;
        const std::size_t end = std::min(n, begin + block);
        try {
          for (std::size_t i = begin; i < end; ++i) out[i] = fn(items[i]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return out;
}

}  // namespace grit

#endif  // GRIT_PARALLEL_H_
