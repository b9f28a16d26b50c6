#pragma once

#include <cstddef>
#include <cstdint>

#include "semdup/embedding.hpp"

// Synthetic embedding sets with known duplicate structure.
namespace semdup::synthetic {

// n rows drawn with replacement from `unique` uniform points on S^d.
EmbeddingSet duplicate_stream(int d, std::size_t unique, std::size_t n, std::uint64_t seed);

struct TwoRegimeSpec {
  int d = 8;
  std::size_t count = 1 << 14;
  std::size_t n_star = 1 << 11;   // ladder rungs up to this size see only uniform points
  double jitter_angle = 1e-3;     // radians between a copy and its source
  std::uint64_t ladder_seed = 0;  // seed the ladder will be run with
  std::uint64_t seed = 0;
};

// Uniform background whose rows past position n_star of the ladder's
// subsample order are jittered copies of earlier rows. A nested ladder run
// with spec.ladder_seed therefore sees a pure uniform pool for N <= n_star
// and a growing share of near-duplicates above it.
EmbeddingSet two_regime_set(const TwoRegimeSpec& spec);

}  // namespace semdup::synthetic
