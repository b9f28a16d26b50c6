#include <algorithm>
#include <cmath>
#include <new>
#include <numeric>

#include "semdup/error.hpp"
#include "semdup/nnstats.hpp"
#include "semdup/regression.hpp"
#include "semdup/rng.hpp"

namespace semdup::nnstats {

std::vector<std::uint32_t> ladder_subsample_order(std::size_t count, std::size_t max_size,
                                                  std::uint64_t seed) {
  if (max_size > count) {
    throw DomainError("subsample of " + std::to_string(max_size) + " exceeds " +
                      std::to_string(count) + " points");
  }
  check_memory_budget(count * sizeof(std::uint32_t), "subsample permutation");
  std::vector<std::uint32_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(derive_seed(seed, "ladder-subsample"));
  for (std::size_t i = 0; i < max_size && i + 1 < count; ++i) {
    const std::size_t j = i + rng.below(count - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_size);
  return idx;
}

BreakdownResult detect_breakdown(const LadderResult& ladder, const FitWindow& window,
                                 double deviation_factor) {
  if (!(deviation_factor > 1.0)) {
    throw DomainError("deviation factor must exceed 1, got " + std::to_string(deviation_factor));
  }
  if (window.last > ladder.entries.size() || window.first >= window.last ||
      window.last - window.first < 3) {
    throw DomainError("fit window needs at least 3 rungs within the ladder");
  }
  std::vector<double> lx, ly;
  for (std::size_t r = window.first; r < window.last; ++r) {
    const auto& e = ladder.entries[r];
    if (!(e.report.mean_gap > 0.0)) {
      throw FitError("non-positive mean gap at N = " + std::to_string(e.n) +
                     " inside the fit window");
    }
    lx.push_back(std::log(static_cast<double>(e.n)));
    ly.push_back(std::log(e.report.mean_gap));
  }
  const LineFit line = fit_line(lx, ly);
  BreakdownResult out;
  out.fit = {line.intercept, line.slope};
  for (const auto& e : ladder.entries) {
    const double pred =
        std::exp(line.intercept + line.slope * std::log(static_cast<double>(e.n)));
    out.predicted_gap.push_back(pred);
    if (!out.breakdown_n && e.report.mean_gap < pred / deviation_factor) out.breakdown_n = e.n;
  }
  return out;
}

LadderResult run_subsample_ladder(const EmbeddingSet& set, std::span<const std::size_t> sizes,
                                  const LadderOptions& options) {
  if (sizes.empty()) throw DomainError("ladder needs at least one size");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 2) throw DomainError("ladder sizes must be at least 2");
    if (k > 0 && sizes[k] <= sizes[k - 1]) {
      throw DomainError("ladder sizes must be strictly increasing");
    }
  }
  if (sizes.back() > set.count()) {
    throw DomainError("ladder size " + std::to_string(sizes.back()) + " exceeds the " +
                      std::to_string(set.count()) + " available points");
  }
  if (options.queries_cap == 0) throw DomainError("queries cap must be positive");
  if (!set.normalized()) throw DomainError("ladder needs a normalized set");

  LadderResult out;
  out.seed = options.seed;
  out.queries_cap = options.queries_cap;
  out.fit_window = options.fit_window;
  out.deviation_factor = options.deviation_factor;

  const auto order = ladder_subsample_order(set.count(), sizes.back(), options.seed);
  for (std::size_t rung = 0; rung < sizes.size(); ++rung) {
    const std::size_t n = sizes[rung];
    try {
      const EmbeddingSet sub = set.gather(std::span(order).first(n));
      std::vector<std::uint32_t> queries(std::min(n, options.queries_cap));
      std::iota(queries.begin(), queries.end(), 0u);
      NNReport report;
      if (n <= options.exact_cutoff) {
        report = nn_exact(sub, queries, options.search);
      } else {
        LshParams lsh = options.lsh;
        lsh.seed = derive_seed(options.seed, "ladder-lsh", rung);
        const LshIndex index(sub, lsh);
        report = nn_approx(index, queries, options.search);
      }
      out.entries.push_back({n, std::move(report)});
    } catch (const Error& e) {
      out.failures.push_back({n, e.what()});
    } catch (const std::bad_alloc&) {
      out.failures.push_back({n, "out of memory"});
    }
  }

  FitWindow window = options.fit_window;
  window.last = std::min(window.last, out.entries.size());
  if (window.last >= window.first + 3) {
    try {
      const auto br = detect_breakdown(out, window, options.deviation_factor);
      out.powerlaw_fit = br.fit;
      out.breakdown_n = br.breakdown_n;
      out.fit_window = window;
    } catch (const FitError& e) {
      out.failures.push_back({0, std::string("power-law fit: ") + e.what()});
    }
  }
  return out;
}

}  // namespace semdup::nnstats
