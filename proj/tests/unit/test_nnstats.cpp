#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semdup/error.hpp"
#include "semdup/nnstats.hpp"
#include "semdup/nullmodel.hpp"
#include "semdup/rng.hpp"

using namespace semdup;
using namespace semdup::nnstats;

namespace {

EmbeddingSet uniform(int d, std::size_t n, std::uint64_t seed) {
  return nullmodel::sample_uniform_sphere(nullmodel::NullModelSpec::uniform(d, seed), n);
}

// Straightforward O(N^2) reference.
std::vector<double> brute_force(const EmbeddingSet& s) {
  std::vector<double> out(s.count(), -2.0);
  for (std::size_t i = 0; i < s.count(); ++i) {
    for (std::size_t j = 0; j < s.count(); ++j) {
      if (i != j) out[i] = std::max(out[i], dot_f64(s.row(i).data(), s.row(j).data(), s.dim()));
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("nnstats") {

TEST_CASE("hand-built configurations") {
  EmbeddingSet anti(2, {1.0f, 0.0f, -1.0f, 0.0f}, true);
  CHECK(nn_exact(anti).mean_nn_similarity == -1.0);

  EmbeddingSet three(2, {1.0f, 0.0f, 0.0f, 1.0f, -1.0f, 0.0f}, true);
  const auto r = nn_exact(three);
  for (double m : r.nn_similarity) CHECK(m == 0.0);
  CHECK(r.mean_nn_similarity == 0.0);
  CHECK(r.mean_gap == 1.0);
  CHECK(r.mean_angle == doctest::Approx(M_PI / 2));
  // Point 0 ties between 1 and 2 (both at 0); smallest index wins.
  CHECK(r.nn_index[0] == 1);
  CHECK(r.nn_index[2] == 1);
}

TEST_CASE("input contract") {
  CHECK_THROWS_AS(nn_exact(EmbeddingSet(2, {1.0f, 0.0f}, true)), DomainError);
  CHECK_THROWS_AS(nn_exact(EmbeddingSet(2, {1.0f, 0.0f, 0.0f, 1.0f}, false)), DomainError);
  const auto s = uniform(3, 10, 1);
  const std::uint32_t bad[] = {10};
  CHECK_THROWS_AS(nn_exact(s, bad), DomainError);
}

TEST_CASE("matches a brute-force scan") {
  for (int d : {1, 4, 31}) {
    const auto s = uniform(d, 777, 40 + d);
    const auto ref = brute_force(s);
    const auto r = nn_exact(s);
    for (std::size_t i = 0; i < s.count(); ++i) CHECK(r.nn_similarity[i] == ref[i]);
  }
}

TEST_CASE("duplicates are folded exactly") {
  auto s = uniform(5, 300, 2);
  std::vector<float> data(s.data().begin(), s.data().end());
  // Rows 300..302 copy row 17 three times.
  for (int c = 0; c < 3; ++c) data.insert(data.end(), s.row(17).begin(), s.row(17).end());
  const EmbeddingSet t(s.dim(), std::move(data), true);
  const auto r = nn_exact(t);
  for (std::uint32_t i : {17u, 300u, 301u, 302u}) {
    CHECK(r.nn_similarity[i] == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(r.nn_index[17] == 300);
  CHECK(r.nn_index[300] == 17);
  CHECK(r.nn_index[302] == 17);
  const auto ref = brute_force(t);
  for (std::size_t i = 0; i < t.count(); ++i) CHECK(r.nn_similarity[i] == ref[i]);
}

TEST_CASE("row permutation permutes the per-point values") {
  const auto s = uniform(6, 1000, 3);
  std::vector<std::uint32_t> perm(s.count());
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(5);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  auto p = s.gather(perm);
  const auto a = nn_exact(s);
  const auto b = nn_exact(p);
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(b.nn_similarity[i] == a.nn_similarity[perm[i]]);
  CHECK(b.mean_nn_similarity == doctest::Approx(a.mean_nn_similarity).epsilon(1e-14));
}

TEST_CASE("thread count does not change results") {
  const auto s = uniform(8, 3001, 6);
  SearchOptions one, four;
  four.threads = 4;
  const auto a = nn_exact(s, one);
  const auto b = nn_exact(s, four);
  CHECK(a.nn_similarity == b.nn_similarity);
  CHECK(a.nn_index == b.nn_index);
  CHECK(a.mean_nn_similarity == b.mean_nn_similarity);
}

TEST_CASE("tail fractions") {
  const std::vector<double> m = {0.1, 0.5, 0.5, 0.9};
  const std::vector<double> t = {0.5, -1.0, 0.95, 0.5};
  const auto f = tail_fraction(m, t);
  REQUIRE(f.size() == 3);
  CHECK(f[0].threshold == -1.0);
  CHECK(f[0].fraction == 1.0);
  CHECK(f[1].fraction == 0.75);
  CHECK(f[2].fraction == 0.0);
  const std::vector<double> bad = {1.0000001};
  CHECK_THROWS_AS(tail_fraction(m, bad), DomainError);
}

TEST_CASE("uniform pools agree with the null model") {
  const int d = 8;
  const std::uint64_t n = 10000;
  const int reps = 50;
  std::vector<double> means, tails;
  SearchOptions opt;
  opt.thresholds = {0.5};
  for (int r = 0; r < reps; ++r) {
    const auto rep = nn_exact(uniform(d, n, derive_seed(77, "pool", r)), opt);
    means.push_back(rep.mean_nn_similarity);
    tails.push_back(rep.tail_fractions[0].fraction);
  }
  auto mean_se = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / (v.size() - 1) / v.size())};
  };
  const auto [m, se] = mean_se(means);
  CHECK(std::abs(m - nullmodel::expected_nn_similarity_uniform(d, n).expected_nn_similarity) <= 4 * se);
  const auto [tm, tse] = mean_se(tails);
  CHECK(std::abs(tm - (1.0 - nullmodel::nn_similarity_cdf(d, n, 0.5))) <= 4 * tse);
}

}  // TEST_SUITE
