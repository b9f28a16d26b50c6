#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace semdup {

// Hardware concurrency, at least 1.
unsigned default_threads();

// Splits [0, n) into contiguous chunks processed by up to `threads` workers.
// body(begin, end, worker) must only write to state owned by its range or by
// its worker slot. Exceptions thrown by any worker are rethrown (first one wins).
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t, unsigned)>& body);

// Pairwise (cascade) summation; result depends only on the input order.
double pairwise_sum(std::span<const double> values);

inline double pairwise_mean(std::span<const double> values) {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace semdup
