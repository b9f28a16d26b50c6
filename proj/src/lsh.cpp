#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semdup/error.hpp"
#include "semdup/nnstats.hpp"
#include "semdup/parallel.hpp"
#include "semdup/rng.hpp"

namespace semdup::nnstats {
namespace {

constexpr std::size_t kLanes = 8;
constexpr std::size_t kMaxProbeMasks = std::size_t{1} << 20;

// Number of masks with popcount <= radius over `bits` bits, saturating.
std::size_t probe_count(std::size_t bits, std::size_t radius) {
  std::size_t total = 0;
  double choose = 1.0;
  for (std::size_t i = 0; i <= std::min(bits, radius); ++i) {
    if (i > 0) choose = choose * static_cast<double>(bits - i + 1) / static_cast<double>(i);
    total += static_cast<std::size_t>(std::min(choose, static_cast<double>(kMaxProbeMasks) + 1));
    if (total > kMaxProbeMasks) return kMaxProbeMasks + 1;
  }
  return total;
}

void enumerate_masks(std::size_t bits, std::size_t radius, std::size_t start, std::uint64_t mask,
                     std::vector<std::uint64_t>& out) {
  out.push_back(mask);
  if (radius == 0) return;
  for (std::size_t b = start; b < bits; ++b) {
    enumerate_masks(bits, radius - 1, b + 1, mask | (std::uint64_t{1} << b), out);
  }
}

}  // namespace

LshIndex::LshIndex(const EmbeddingSet& set, const LshParams& params)
    : params_(params), set_(&set) {
  if (!set.normalized()) throw DomainError("LSH index needs a normalized set");
  if (params.tables == 0) throw DomainError("LSH index needs at least one table");
  if (params.hyperplanes_per_table > 64) {
    throw DomainError("at most 64 hyperplanes per table are supported");
  }
  if (set.count() > std::numeric_limits<std::uint32_t>::max()) {
    throw ResourceError("LSH index supports at most 2^32-1 points");
  }
  const std::size_t n = set.count();
  const std::size_t dim = set.dim();
  const std::size_t bits = params.hyperplanes_per_table;
  check_memory_budget(params.tables * n * (sizeof(std::uint64_t) * 2 + sizeof(std::uint32_t)),
                      "LSH tables");

  Rng rng(derive_seed(params.seed, "lsh-planes"));
  planes_.resize(params.tables * bits * dim);
  for (float& p : planes_) p = static_cast<float>(rng.normal());

  signatures_.resize(params.tables * n);
  for (std::size_t t = 0; t < params.tables; ++t) {
    for (std::size_t i = 0; i < n; ++i) signatures_[t * n + i] = hash(t, set.row(i));
  }

  tables_.resize(params.tables);
  std::vector<std::uint32_t> order(n);
  std::size_t total_keys = 0;
  for (std::size_t t = 0; t < params.tables; ++t) {
    const std::uint64_t* sig = signatures_.data() + t * n;
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [sig](std::uint32_t a, std::uint32_t b) { return sig[a] < sig[b]; });
    Table& table = tables_[t];
    table.members = order;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == 0 || sig[order[k]] != sig[order[k - 1]]) {
        table.keys.push_back(sig[order[k]]);
        table.offsets.push_back(static_cast<std::uint32_t>(k));
      }
    }
    table.offsets.push_back(static_cast<std::uint32_t>(n));
    total_keys += table.keys.size();
  }

  // Probing every flip mask costs a binary search each; when that outnumbers
  // the occupied buckets, scanning the buckets is cheaper and equivalent.
  const std::size_t masks = probe_count(bits, params.probe_radius);
  const double mean_keys = static_cast<double>(total_keys) / static_cast<double>(params.tables);
  scan_all_keys_ = masks > kMaxProbeMasks || static_cast<double>(masks) > mean_keys;
  if (!scan_all_keys_) {
    probe_masks_.reserve(masks);
    enumerate_masks(bits, params.probe_radius, 0, 0, probe_masks_);
  }
}

std::uint64_t LshIndex::hash(std::size_t table, std::span<const float> v) const {
  const std::size_t dim = set_->dim();
  const std::size_t bits = params_.hyperplanes_per_table;
  const float* base = planes_.data() + table * bits * dim;
  std::uint64_t sig = 0;
  for (std::size_t b = 0; b < bits; ++b) {
    if (dot_f64(base + b * dim, v.data(), dim) >= 0.0) sig |= std::uint64_t{1} << b;
  }
  return sig;
}

LshIndex build_lsh_index(const EmbeddingSet& set, const LshParams& params) {
  return LshIndex(set, params);
}

NNReport nn_approx(const LshIndex& index, std::span<const std::uint32_t> queries,
                   const SearchOptions& options) {
  const EmbeddingSet& set = index.set();
  const std::size_t n = set.count();
  const std::size_t dim = set.dim();
  if (n < 2) throw DomainError("nearest-neighbour search needs at least 2 points");
  if (queries.empty()) throw DomainError("no queries given");
  for (std::uint32_t q : queries) {
    if (q >= n) throw DomainError("query index " + std::to_string(q) + " out of range");
  }

  const std::size_t q = queries.size();
  const unsigned threads = std::max(1u, options.threads);
  std::vector<double> best(q);
  std::vector<std::uint32_t> best_index(q);
  std::vector<std::uint8_t> fallback(q, 0);
  std::vector<double> candidates(q, 0.0);

  // Visit queries grouped by their first-table bucket so consecutive queries
  // share most candidate rows in cache. Results land at the original slots.
  std::vector<std::uint32_t> visit(q);
  std::iota(visit.begin(), visit.end(), 0u);
  std::stable_sort(visit.begin(), visit.end(), [&](std::uint32_t a, std::uint32_t b) {
    return index.signature(0, queries[a]) < index.signature(0, queries[b]);
  });

  parallel_for(q, threads, [&](std::size_t begin, std::size_t end, unsigned) {
    std::vector<std::uint32_t> stamp(n, 0);
    std::uint32_t epoch = 0;
    std::vector<std::uint32_t> cand;
    for (std::size_t v = begin; v < end; ++v) {
      const std::size_t r = visit[v];
      const std::uint32_t i = queries[r];
      if (++epoch == 0) {
        std::fill(stamp.begin(), stamp.end(), 0);
        epoch = 1;
      }
      stamp[i] = epoch;
      cand.clear();
      for (std::size_t t = 0; t < index.params().tables; ++t) {
        index.for_each_candidate(t, index.signature(t, i), [&](std::uint32_t c) {
          if (stamp[c] != epoch) {
            stamp[c] = epoch;
            cand.push_back(c);
          }
        });
      }
      if (cand.empty()) {
        fallback[r] = 1;
        Rng rng(derive_seed(index.params().seed, "lsh-fallback", i));
        const std::size_t sample = std::max<std::size_t>(1, n / 100);
        for (std::size_t s = 0; s < sample; ++s) {
          auto c = static_cast<std::uint32_t>(rng.below(n - 1));
          if (c >= i) ++c;
          cand.push_back(c);
        }
      }
      candidates[r] = static_cast<double>(cand.size());

      const float* qv = set.row(i).data();
      double bv = -std::numeric_limits<double>::infinity();
      std::uint32_t bi = 0;
      std::size_t k = 0;
      // kLanes independent chains; each is the same sequential sum as dot_f64,
      // so results match the exhaustive kernel bit for bit.
      for (; k + kLanes <= cand.size(); k += kLanes) {
        const float* x[kLanes];
        for (std::size_t m = 0; m < kLanes; ++m) x[m] = set.row(cand[k + m]).data();
        double acc[kLanes] = {};
        for (std::size_t d = 0; d < dim; ++d) {
          const double qd = qv[d];
          for (std::size_t m = 0; m < kLanes; ++m) acc[m] += qd * static_cast<double>(x[m][d]);
        }
        for (std::size_t m = 0; m < kLanes; ++m) {
          if (acc[m] > bv || (acc[m] == bv && cand[k + m] < bi)) {
            bv = acc[m];
            bi = cand[k + m];
          }
        }
      }
      for (; k < cand.size(); ++k) {
        const double s = dot_f64(qv, set.row(cand[k]).data(), dim);
        if (s > bv || (s == bv && cand[k] < bi)) {
          bv = s;
          bi = cand[k];
        }
      }
      best[r] = bv;
      best_index[r] = bi;
    }
  });

  NNReport report = make_report(n, dim, {queries.begin(), queries.end()}, std::move(best),
                                std::move(best_index), IndexKind::Lsh, options.thresholds);
  for (std::size_t r = 0; r < q; ++r) {
    if (fallback[r]) report.fallback_queries.push_back(queries[r]);
  }
  report.mean_candidates = pairwise_mean(candidates);
  return report;
}

NNReport nn_approx(const LshIndex& index, const SearchOptions& options) {
  std::vector<std::uint32_t> all(index.size());
  std::iota(all.begin(), all.end(), 0u);
  return nn_approx(index, all, options);
}

}  // namespace semdup::nnstats
