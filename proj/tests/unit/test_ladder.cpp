#include <doctest.h>

#include <cmath>
#include <set>

#include "semdup/error.hpp"
#include "semdup/nnstats.hpp"
#include "semdup/nullmodel.hpp"
#include "semdup/rng.hpp"
#include "semdup/synthetic.hpp"

using namespace semdup;
using namespace semdup::nnstats;

namespace {

EmbeddingSet uniform(int d, std::size_t n, std::uint64_t seed) {
  return nullmodel::sample_uniform_sphere(nullmodel::NullModelSpec::uniform(d, seed), n);
}

// A ladder with the given sizes and mean gaps and nothing else filled in.
LadderResult synthetic_ladder(const std::vector<std::size_t>& ns, const std::vector<double>& gaps) {
  LadderResult r;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    LadderEntry e;
    e.n = ns[i];
    e.report.mean_gap = gaps[i];
    r.entries.push_back(e);
  }
  return r;
}

}  // namespace

TEST_SUITE("ladder") {

TEST_CASE("subsample order is a nested prefix") {
  const auto full = ladder_subsample_order(1000, 600, 3);
  const auto part = ladder_subsample_order(1000, 50, 3);
  CHECK(std::equal(part.begin(), part.end(), full.begin()));
  CHECK(std::set<std::uint32_t>(full.begin(), full.end()).size() == 600);
  CHECK(ladder_subsample_order(1000, 50, 4) != part);
  CHECK_THROWS_AS(ladder_subsample_order(10, 11, 0), DomainError);
}

TEST_CASE("singleton ladder equals a direct call") {
  const auto s = uniform(6, 3000, 1);
  const std::size_t sizes[] = {1500};
  LadderOptions opt;
  opt.seed = 5;
  const auto r = run_subsample_ladder(s, sizes, opt);
  REQUIRE(r.entries.size() == 1);
  CHECK_FALSE(r.powerlaw_fit.has_value());
  const auto order = ladder_subsample_order(s.count(), 1500, 5);
  const auto direct = nn_exact(s.gather(order));
  CHECK(r.entries[0].report.nn_similarity == direct.nn_similarity);
  CHECK(r.entries[0].report.mean_nn_similarity == direct.mean_nn_similarity);

  SUBCASE("approximate rung") {
    opt.exact_cutoff = 100;
    const auto a = run_subsample_ladder(s, sizes, opt);
    LshParams p = opt.lsh;
    p.seed = derive_seed(5, "ladder-lsh", 0);
    const auto sub = s.gather(order);
    const auto d = nn_approx(LshIndex(sub, p));
    CHECK(a.entries[0].report.index_kind == IndexKind::Lsh);
    CHECK(a.entries[0].report.nn_similarity == d.nn_similarity);
  }
}

TEST_CASE("queries cap limits the query count") {
  const auto s = uniform(4, 2000, 2);
  const std::size_t sizes[] = {500, 1000, 2000};
  LadderOptions opt;
  opt.queries_cap = 700;
  const auto r = run_subsample_ladder(s, sizes, opt);
  CHECK(r.entries[0].report.query_count == 500);
  CHECK(r.entries[1].report.query_count == 700);
  CHECK(r.entries[2].report.query_count == 700);
  CHECK(r.powerlaw_fit.has_value());
}

TEST_CASE("uniform ladder follows the null-model slope") {
  const auto s = uniform(8, 1 << 16, 3);
  std::vector<std::size_t> sizes;
  for (std::size_t n = 1 << 10; n <= (1 << 16); n *= 2) sizes.push_back(n);
  LadderOptions opt;
  opt.fit_window = {0, sizes.size()};
  const auto r = run_subsample_ladder(s, sizes, opt);
  REQUIRE(r.powerlaw_fit.has_value());
  CHECK(std::abs(r.powerlaw_fit->slope + 0.25) <= 0.05);
  CHECK_FALSE(r.breakdown_n.has_value());

  const auto again = run_subsample_ladder(s, sizes, opt);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    CHECK(again.entries[i].report.mean_gap == r.entries[i].report.mean_gap);
  }
}

TEST_CASE("two-regime set breaks down right after N*") {
  synthetic::TwoRegimeSpec spec;
  spec.d = 8;
  spec.count = 1 << 14;
  spec.n_star = 1 << 11;
  spec.ladder_seed = 4;
  spec.seed = 8;
  const auto s = synthetic::two_regime_set(spec);
  std::vector<std::size_t> sizes;
  for (std::size_t n = 256; n <= spec.count; n *= 2) sizes.push_back(n);
  LadderOptions opt;
  opt.seed = spec.ladder_seed;
  const auto r = run_subsample_ladder(s, sizes, opt);
  REQUIRE(r.breakdown_n.has_value());
  CHECK(*r.breakdown_n == 2 * spec.n_star);
}

TEST_CASE("breakdown detection on constructed gaps") {
  std::vector<std::size_t> ns;
  std::vector<double> gaps;
  for (std::size_t n = 1024; n <= 65536; n *= 2) {
    ns.push_back(n);
    gaps.push_back(0.9 * std::pow(static_cast<double>(n), -0.25));
  }
  auto ladder = synthetic_ladder(ns, gaps);
  for (double f : {1.0001, 1.5, 4.0}) {
    const auto br = detect_breakdown(ladder, {0, 4}, f);
    CHECK_FALSE(br.breakdown_n.has_value());
    CHECK(br.fit.slope == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(br.predicted_gap.size() == ns.size());
  }

  ladder.entries.back().report.mean_gap /= 2.0;
  const auto br = detect_breakdown(ladder, {0, 4}, 1.5);
  REQUIRE(br.breakdown_n.has_value());
  CHECK(*br.breakdown_n == ns.back());

  CHECK_THROWS_AS(detect_breakdown(ladder, {0, 4}, 1.0), DomainError);
  CHECK_THROWS_AS(detect_breakdown(ladder, {0, 2}, 1.5), DomainError);
  CHECK_THROWS_AS(detect_breakdown(ladder, {5, 9}, 1.5), DomainError);
  ladder.entries[1].report.mean_gap = 0.0;
  CHECK_THROWS_AS(detect_breakdown(ladder, {0, 4}, 1.5), FitError);
}

TEST_CASE("rung failures are recorded and later rungs still run") {
  const auto s = uniform(7, 4096, 5);
  const std::size_t sizes[] = {512, 1024, 2048, 4096};
  const auto saved = memory_budget_bytes();
  // Enough for the permutation and gathers, not for the 4096-point column matrix.
  set_memory_budget_bytes(100000);
  LadderOptions opt;
  opt.fit_window = {0, 3};
  const auto r = run_subsample_ladder(s, sizes, opt);
  set_memory_budget_bytes(saved);
  CHECK(r.entries.size() == 3);
  bool failed_big = false;
  for (const auto& f : r.failures) failed_big |= f.n == 4096;
  CHECK(failed_big);
}

TEST_CASE("ladder contract") {
  const auto s = uniform(3, 100, 6);
  const std::size_t too_big[] = {50, 101};
  const std::size_t unsorted[] = {50, 40};
  CHECK_THROWS_AS(run_subsample_ladder(s, too_big), DomainError);
  CHECK_THROWS_AS(run_subsample_ladder(s, unsorted), DomainError);
  CHECK_THROWS_AS(run_subsample_ladder(s, std::span<const std::size_t>{}), DomainError);
}

}  // TEST_SUITE
