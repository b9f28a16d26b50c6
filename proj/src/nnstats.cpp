#include "semdup/nnstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "semdup/error.hpp"
#include "semdup/parallel.hpp"

namespace semdup::nnstats {

std::string to_string(IndexKind kind) { return kind == IndexKind::Exact ? "exact" : "lsh"; }

std::vector<double> default_thresholds() { return {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99}; }

std::vector<TailFraction> tail_fraction(std::span<const double> nn_similarity,
                                        std::span<const double> thresholds) {
  std::vector<double> ts(thresholds.begin(), thresholds.end());
  for (double t : ts) {
    if (!(t >= -1.0 && t <= 1.0)) {
      throw DomainError("tail threshold must lie in [-1, 1], got " + std::to_string(t));
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  std::vector<double> sorted(nn_similarity.begin(), nn_similarity.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<TailFraction> out;
  out.reserve(ts.size());
  const double n = static_cast<double>(sorted.size());
  for (double t : ts) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), t);
    const auto hits = static_cast<double>(sorted.end() - first);
    out.push_back({t, sorted.empty() ? 0.0 : hits / n});
  }
  return out;
}

NNReport make_report(std::size_t pool_size, std::size_t dim, std::vector<std::uint32_t> queries,
                     std::vector<double> nn_similarity, std::vector<std::uint32_t> nn_index,
                     IndexKind kind, std::span<const double> thresholds) {
  NNReport r;
  r.pool_size = pool_size;
  r.dim = dim;
  r.query_count = queries.size();
  r.index_kind = kind;
  std::vector<double> gaps(nn_similarity.size());
  std::vector<double> angles(nn_similarity.size());
  for (std::size_t i = 0; i < nn_similarity.size(); ++i) {
    const double m = nn_similarity[i];
    gaps[i] = 1.0 - m;
    angles[i] = std::acos(std::clamp(m, -1.0, 1.0));
  }
  r.mean_nn_similarity = pairwise_mean(nn_similarity);
  r.mean_gap = pairwise_mean(gaps);
  r.mean_angle = pairwise_mean(angles);
  r.tail_fractions = tail_fraction(nn_similarity, thresholds);
  r.queries = std::move(queries);
  r.nn_similarity = std::move(nn_similarity);
  r.nn_index = std::move(nn_index);
  return r;
}

namespace {

void check_search_input(const EmbeddingSet& set, std::span<const std::uint32_t> queries) {
  if (!set.normalized()) throw DomainError("nearest-neighbour search needs a normalized set");
  if (set.count() < 2) throw DomainError("nearest-neighbour search needs at least 2 points");
  if (queries.empty()) throw DomainError("no queries given");
  for (std::uint32_t q : queries) {
    if (q >= set.count()) {
      throw DomainError("query index " + std::to_string(q) + " out of range (" +
                        std::to_string(set.count()) + " points)");
    }
  }
}

std::uint64_t hash_row(std::span<const float> row) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(row.data());
  for (std::size_t i = 0; i < row.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Groups bitwise-identical rows. Unique ids follow first occurrence, so the
// representative (first member) of each group is also its smallest index.
struct DuplicateGroups {
  std::vector<std::uint32_t> group_of;     // per point
  std::vector<std::uint32_t> first;        // per group: smallest member
  std::vector<std::uint32_t> second;       // per group: next member or npos
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();
};

DuplicateGroups group_duplicates(const EmbeddingSet& set) {
  DuplicateGroups g;
  const std::size_t n = set.count();
  const std::size_t bytes = set.dim() * sizeof(float);
  g.group_of.resize(n);
  std::unordered_multimap<std::uint64_t, std::uint32_t> seen;
  seen.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = set.row(i);
    const std::uint64_t h = hash_row(row);
    std::uint32_t found = DuplicateGroups::npos;
    auto [lo, hi] = seen.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      if (std::memcmp(set.row(g.first[it->second]).data(), row.data(), bytes) == 0) {
        found = it->second;
        break;
      }
    }
    if (found == DuplicateGroups::npos) {
      found = static_cast<std::uint32_t>(g.first.size());
      g.first.push_back(static_cast<std::uint32_t>(i));
      g.second.push_back(DuplicateGroups::npos);
      seen.emplace(h, found);
    } else if (g.second[found] == DuplicateGroups::npos) {
      g.second[found] = static_cast<std::uint32_t>(i);
    }
    g.group_of[i] = found;
  }
  return g;
}

constexpr std::size_t kQueryBlock = 4;
constexpr std::size_t kColumnBlock = 512;

}  // namespace

NNReport nn_exact(const EmbeddingSet& set, std::span<const std::uint32_t> queries,
                  const SearchOptions& options) {
  check_search_input(set, queries);
  const std::size_t dim = set.dim();
  const DuplicateGroups groups = group_duplicates(set);
  const std::size_t u = groups.first.size();
  check_memory_budget(u * dim * sizeof(float), "exact search column matrix");

  // Column-major copy of the distinct rows: xt[k * u + j].
  std::vector<float> xt(u * dim);
  for (std::size_t j = 0; j < u; ++j) {
    const auto row = set.row(groups.first[j]);
    for (std::size_t k = 0; k < dim; ++k) xt[k * u + j] = row[k];
  }

  const std::size_t q = queries.size();
  std::vector<double> best(q, -std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> best_index(q, DuplicateGroups::npos);

  parallel_for(
      (q + kQueryBlock - 1) / kQueryBlock, options.threads,
      [&](std::size_t block_begin, std::size_t block_end, unsigned) {
        std::vector<double> acc(kQueryBlock * kColumnBlock);
        std::vector<double> qv(kQueryBlock * dim, 0.0);
        for (std::size_t b = block_begin; b < block_end; ++b) {
          const std::size_t q0 = b * kQueryBlock;
          const std::size_t nq = std::min(kQueryBlock, q - q0);
          std::fill(qv.begin(), qv.end(), 0.0);
          std::uint32_t self_group[kQueryBlock];
          for (std::size_t r = 0; r < nq; ++r) {
            const auto row = set.row(queries[q0 + r]);
            for (std::size_t k = 0; k < dim; ++k) qv[k * kQueryBlock + r] = row[k];
            self_group[r] = groups.group_of[queries[q0 + r]];
          }
          double local_best[kQueryBlock];
          std::uint32_t local_group[kQueryBlock];
          std::fill(local_best, local_best + kQueryBlock,
                    -std::numeric_limits<double>::infinity());
          std::fill(local_group, local_group + kQueryBlock, DuplicateGroups::npos);

          for (std::size_t j0 = 0; j0 < u; j0 += kColumnBlock) {
            const std::size_t nj = std::min(kColumnBlock, u - j0);
            double* a0 = acc.data();
            double* a1 = a0 + kColumnBlock;
            double* a2 = a1 + kColumnBlock;
            double* a3 = a2 + kColumnBlock;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t k = 0; k < dim; ++k) {
              const float* x = xt.data() + k * u + j0;
              const double c0 = qv[k * kQueryBlock + 0];
              const double c1 = qv[k * kQueryBlock + 1];
              const double c2 = qv[k * kQueryBlock + 2];
              const double c3 = qv[k * kQueryBlock + 3];
              for (std::size_t j = 0; j < nj; ++j) {
                const double xv = x[j];
                a0[j] += c0 * xv;
                a1[j] += c1 * xv;
                a2[j] += c2 * xv;
                a3[j] += c3 * xv;
              }
            }
            for (std::size_t r = 0; r < nq; ++r) {
              const double* a = acc.data() + r * kColumnBlock;
              double bv = local_best[r];
              std::uint32_t bg = local_group[r];
              for (std::size_t j = 0; j < nj; ++j) {
                if (a[j] > bv && j0 + j != self_group[r]) {
                  bv = a[j];
                  bg = static_cast<std::uint32_t>(j0 + j);
                }
              }
              local_best[r] = bv;
              local_group[r] = bg;
            }
          }

          for (std::size_t r = 0; r < nq; ++r) {
            const std::uint32_t i = queries[q0 + r];
            double bv = local_best[r];
            std::uint32_t bi =
                local_group[r] == DuplicateGroups::npos ? DuplicateGroups::npos
                                                        : groups.first[local_group[r]];
            const std::uint32_t g = self_group[r];
            const std::uint32_t twin = groups.first[g] == i ? groups.second[g] : groups.first[g];
            if (twin != DuplicateGroups::npos) {
              const auto row = set.row(i);
              const double self = dot_f64(row.data(), row.data(), dim);
              if (self > bv || (self == bv && twin < bi)) {
                bv = self;
                bi = twin;
              }
            }
            best[q0 + r] = bv;
            best_index[q0 + r] = bi;
          }
        }
      });

  return make_report(set.count(), dim, {queries.begin(), queries.end()}, std::move(best),
                     std::move(best_index), IndexKind::Exact, options.thresholds);
}

NNReport nn_exact(const EmbeddingSet& set, const SearchOptions& options) {
  std::vector<std::uint32_t> all(set.count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  return nn_exact(set, all, options);
}

}  // namespace semdup::nnstats
