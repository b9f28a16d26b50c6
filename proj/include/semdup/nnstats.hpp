#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semdup/embedding.hpp"

namespace semdup::nnstats {

enum class IndexKind { Exact, Lsh };

std::string to_string(IndexKind kind);

// Default tail thresholds T for P(M_i >= T).
std::vector<double> default_thresholds();

struct TailFraction {
  double threshold = 0.0;
  double fraction = 0.0;
};

struct NNReport {
  std::size_t pool_size = 0;
  std::size_t query_count = 0;
  std::size_t dim = 0;
  double mean_nn_similarity = 0.0;
  double mean_gap = 0.0;
  double mean_angle = 0.0;  // radians
  std::vector<TailFraction> tail_fractions;  // sorted by threshold
  IndexKind index_kind = IndexKind::Exact;

  // Per-query detail, aligned with `queries`.
  std::vector<std::uint32_t> queries;
  std::vector<double> nn_similarity;
  std::vector<std::uint32_t> nn_index;

  // LSH diagnostics.
  std::vector<std::uint32_t> fallback_queries;
  double mean_candidates = 0.0;
};

struct SearchOptions {
  std::vector<double> thresholds = default_thresholds();
  unsigned threads = 1;
};

// Fraction of values >= T for every threshold T (sorted ascending in the
// output). Thresholds must lie in [-1, 1].
std::vector<TailFraction> tail_fraction(std::span<const double> nn_similarity,
                                        std::span<const double> thresholds);

// Builds a report from per-query results (means by pairwise summation).
NNReport make_report(std::size_t pool_size, std::size_t dim, std::vector<std::uint32_t> queries,
                     std::vector<double> nn_similarity, std::vector<std::uint32_t> nn_index,
                     IndexKind kind, std::span<const double> thresholds);

// Exhaustive M_i = max_{j != i} <v_i, v_j> with float storage and double
// accumulation. Bitwise-identical rows are scored once and their mutual
// similarity <v, v> is folded in afterwards, which is exact and makes
// heavily duplicated streams cheap. Ties resolve to the smallest index.
NNReport nn_exact(const EmbeddingSet& set, std::span<const std::uint32_t> queries,
                  const SearchOptions& options = {});
NNReport nn_exact(const EmbeddingSet& set, const SearchOptions& options = {});

struct LshParams {
  std::size_t tables = 18;
  std::size_t hyperplanes_per_table = 12;
  std::size_t probe_radius = 1;
  std::uint64_t seed = 0;
};

// Random-hyperplane (sign) LSH over a normalized set. Each table hashes a
// point to a hyperplanes_per_table-bit signature; queries probe all buckets
// within Hamming distance probe_radius of their own signature.
// The index keeps a reference to `set`, which must outlive it.
class LshIndex {
 public:
  LshIndex(const EmbeddingSet& set, const LshParams& params);

  const LshParams& params() const { return params_; }
  const EmbeddingSet& set() const { return *set_; }
  std::size_t size() const { return set_->count(); }

  // Signature of a stored point in table t.
  std::uint64_t signature(std::size_t table, std::size_t point) const {
    return signatures_[table * set_->count() + point];
  }
  std::uint64_t hash(std::size_t table, std::span<const float> v) const;

  // Calls visit(point) for every point in buckets within probe_radius of
  // `sig` in `table`.
  template <class Visit>
  void for_each_candidate(std::size_t table, std::uint64_t sig, Visit&& visit) const;

  std::size_t bucket_count(std::size_t table) const { return tables_[table].keys.size(); }

 private:
  struct Table {
    std::vector<std::uint64_t> keys;     // sorted distinct signatures
    std::vector<std::uint32_t> offsets;  // keys.size() + 1 offsets into members
    std::vector<std::uint32_t> members;  // point ids grouped by signature
  };

  template <class Visit>
  void visit_bucket(const Table& table, std::uint64_t key, Visit& visit) const;

  LshParams params_;
  const EmbeddingSet* set_;  // not owned; must outlive the index
  std::vector<float> planes_;  // tables * bits * dim
  std::vector<std::uint64_t> signatures_;
  std::vector<Table> tables_;
  std::vector<std::uint64_t> probe_masks_;  // flip masks with popcount <= radius
  bool scan_all_keys_ = false;
};

LshIndex build_lsh_index(const EmbeddingSet& set, const LshParams& params);

// Best candidate among the union of probed buckets. Similarities are computed
// exactly, so each M_i is a lower bound of the exhaustive value. A query with
// no candidates scans a seeded 1% sample instead and is listed in
// fallback_queries.
NNReport nn_approx(const LshIndex& index, std::span<const std::uint32_t> queries,
                   const SearchOptions& options = {});
NNReport nn_approx(const LshIndex& index, const SearchOptions& options = {});

// ---------------------------------------------------------------------------
// Subsample ladders

struct PowerLawLine {
  double intercept = 0.0;  // ln(mean gap) at ln N = 0
  double slope = 0.0;
};

struct FitWindow {
  std::size_t first = 0;  // rung indices, half-open
  std::size_t last = 3;
};

struct LadderEntry {
  std::size_t n = 0;
  NNReport report;
};

struct LadderFailure {
  std::size_t n = 0;
  std::string message;
};

struct LadderResult {
  std::vector<LadderEntry> entries;  // strictly increasing in n
  std::vector<LadderFailure> failures;
  std::optional<PowerLawLine> powerlaw_fit;
  FitWindow fit_window;
  double deviation_factor = 1.5;
  std::optional<std::size_t> breakdown_n;
  std::uint64_t seed = 0;
  std::size_t queries_cap = 0;
};

struct LadderOptions {
  std::size_t queries_cap = 100000;
  std::size_t exact_cutoff = 200000;
  LshParams lsh;
  SearchOptions search;
  FitWindow fit_window;
  double deviation_factor = 1.5;
  std::uint64_t seed = 0;
};

// Nested subsample order: a seeded partial Fisher-Yates shuffle of [0, count)
// whose first `max_size` entries are returned. Rung N uses the first N.
std::vector<std::uint32_t> ladder_subsample_order(std::size_t count, std::size_t max_size,
                                                  std::uint64_t seed);

// One rung per size. Rungs with N <= exact_cutoff use nn_exact, larger ones
// nn_approx; each rung queries its first min(N, queries_cap) points. Rung
// failures are recorded and the remaining rungs still run. When the fit
// window holds >= 3 successful rungs, the power-law fit and breakdown are
// filled in.
LadderResult run_subsample_ladder(const EmbeddingSet& set, std::span<const std::size_t> sizes,
                                  const LadderOptions& options = {});

struct BreakdownResult {
  PowerLawLine fit;
  std::optional<std::size_t> breakdown_n;
  std::vector<double> predicted_gap;  // per ladder entry
};

// Least-squares fit of ln(mean gap) on ln N over the window; breakdown is the
// smallest rung whose observed gap is below predicted / deviation_factor.
BreakdownResult detect_breakdown(const LadderResult& ladder, const FitWindow& window,
                                 double deviation_factor);

// ---------------------------------------------------------------------------

template <class Visit>
void LshIndex::visit_bucket(const Table& table, std::uint64_t key, Visit& visit) const {
  auto it = std::lower_bound(table.keys.begin(), table.keys.end(), key);
  if (it == table.keys.end() || *it != key) return;
  const auto b = static_cast<std::size_t>(it - table.keys.begin());
  for (std::uint32_t k = table.offsets[b]; k < table.offsets[b + 1]; ++k) {
    visit(table.members[k]);
  }
}

template <class Visit>
void LshIndex::for_each_candidate(std::size_t t, std::uint64_t sig, Visit&& visit) const {
  const Table& table = tables_[t];
  if (scan_all_keys_) {
    for (std::size_t b = 0; b < table.keys.size(); ++b) {
      if (static_cast<std::size_t>(__builtin_popcountll(table.keys[b] ^ sig)) >
          params_.probe_radius) {
        continue;
      }
      for (std::uint32_t k = table.offsets[b]; k < table.offsets[b + 1]; ++k) {
        visit(table.members[k]);
      }
    }
    return;
  }
  for (std::uint64_t mask : probe_masks_) visit_bucket(table, sig ^ mask, visit);
}

}  // namespace semdup::nnstats
