#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "semdup/error.hpp"
#include "semdup/keff.hpp"
#include "semdup/nullmodel.hpp"
#include "semdup/rng.hpp"
#include "semdup/synthetic.hpp"

using namespace semdup;
using namespace semdup::keff;

namespace {

nnstats::NNReport report_with(double mean_nn, std::size_t pool, std::size_t dim) {
  nnstats::NNReport r;
  r.mean_nn_similarity = mean_nn;
  r.pool_size = pool;
  r.dim = dim;
  return r;
}

// Fraction of trials where draw 0 has a same-latent partner among draws 1..n-1.
double simulate_partner(const LatentMixture& mix, std::uint64_t n, std::size_t trials, Rng& rng) {
  std::vector<double> cdf(mix.size());
  double acc = 0;
  for (std::size_t z = 0; z < mix.size(); ++z) cdf[z] = acc += mix.weights()[z];
  auto draw = [&] {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * acc);
    return std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
  };
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto z0 = draw();
    for (std::uint64_t j = 1; j < n; ++j) {
      if (draw() == z0) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / trials;
}

}  // namespace

TEST_SUITE("keff") {

TEST_CASE("Simpson effective size") {
  CHECK(simpson_keff(LatentMixture::uniform(7)) == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(simpson_keff(LatentMixture({1.0})) == 1.0);
  CHECK(simpson_keff(LatentMixture({0.5, 0.25, 0.25})) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(simpson_keff(LatentMixture::from_unnormalized({2, 1, 1})) ==
        simpson_keff(LatentMixture::from_unnormalized({1, 2, 1})));
  CHECK(simpson_keff(LatentMixture::from_unnormalized({2, 0, 1, 0, 1})) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(LatentMixture({0.5, 0.6}), DomainError);
  CHECK_THROWS_AS(LatentMixture({1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(LatentMixture::from_unnormalized({0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(LatentMixture::from_unnormalized({1.0, -1.0}), DomainError);
}

TEST_CASE("exact partner probability") {
  for (std::uint64_t n : {2u, 5u, 1000u}) CHECK(partner_probability_exact(LatentMixture::uniform(1), n) == 1.0);
  CHECK(partner_probability_exact(LatentMixture::uniform(2), 2) == doctest::Approx(0.5).epsilon(1e-15));
  for (std::size_t k : {2u, 3u, 5u}) {
    for (std::uint64_t n = 2; n <= 10; ++n) {
      const double closed = 1.0 - std::pow(1.0 - 1.0 / k, static_cast<double>(n - 1));
      CHECK(partner_probability_exact(LatentMixture::uniform(k), n) == doctest::Approx(closed).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(partner_probability_exact(LatentMixture::uniform(3), 1), DomainError);

  SUBCASE("simulation, uniform K=100, N=101") {
    Rng rng(1);
    const auto mix = LatentMixture::uniform(100);
    const std::size_t trials = 1000000;
    const double q = partner_probability_exact(mix, 101);
    const double emp = simulate_partner(mix, 101, trials, rng);
    CHECK(std::abs(emp - q) <= 4 * std::sqrt(q * (1 - q) / trials));
  }

  SUBCASE("nondecreasing in N") {
    const auto mix = LatentMixture::zipf(1.3, 500);
    double prev = 0;
    for (std::uint64_t n = 2; n < 5000; n = n * 3 / 2 + 1) {
      const double q = partner_probability_exact(mix, n);
      CHECK(q >= prev);
      prev = q;
    }
  }
}

TEST_CASE("exponential approximation") {
  CHECK(partner_probability_approx(50.0, 51) == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-14));
  const auto u = LatentMixture::uniform(10000);
  CHECK(std::abs(partner_probability_approx(simpson_keff(u), 1000) - partner_probability_exact(u, 1000)) <= 1e-4);

  SUBCASE("heavy mode breaks it") {
    std::vector<double> w(1001, 0.1 / 1000);
    w[0] = 0.9;
    const LatentMixture heavy(w);
    const double exact = partner_probability_exact(heavy, 10);
    const double approx = partner_probability_approx(simpson_keff(heavy), 10);
    CHECK(std::abs(approx - exact) / exact > 0.05);
  }

  SUBCASE("remainder bound") {
    // For uniform weights the Simpson collapse is exact, so the whole error
    // is the per-latent binomial-to-exponential remainder.
    for (std::size_t k : {100u, 1000u, 20000u}) {
      const auto mix = LatentMixture::uniform(k);
      for (std::uint64_t n : {2u, 10u, 100u, 1000u, 100000u}) {
        const double err = std::abs(partner_probability_approx(simpson_keff(mix), n) - partner_probability_exact(mix, n));
        CHECK(err <= (n - 1.0) * mix.max_weight() * mix.max_weight());
      }
    }
    // Uneven weights: the bound holds for the per-latent exponential sum.
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> w(1000 + 1000 * trial);
      for (double& x : w) x = 0.2 + 1.6 * rng.uniform();
      const auto mix = LatentMixture::from_unnormalized(w);
      REQUIRE(mix.max_weight() <= 0.01);
      for (std::uint64_t n : {2u, 10u, 100u, 1000u, 10000u}) {
        double per_latent = 0;
        for (double x : mix.weights()) per_latent += x * std::exp(-(n - 1.0) * x);
        const double err = std::abs((1 - per_latent) - partner_probability_exact(mix, n));
        CHECK(err <= (n - 1.0) * mix.max_weight() * mix.max_weight());
      }
    }
  }
}

TEST_CASE("distinct cluster count") {
  CHECK(distinct_cluster_count(10, 0) == 0.0);
  CHECK(distinct_cluster_count(1, 1) == 1.0);
  CHECK(distinct_cluster_count(1, 17) == 1.0);
  Rng rng(2);
  const std::size_t trials = 100000;
  double sum = 0, sum2 = 0;
  std::vector<int> seen(50);
  for (std::size_t t = 0; t < trials; ++t) {
    std::fill(seen.begin(), seen.end(), 0);
    int distinct = 0;
    for (int j = 0; j < 50; ++j) distinct += seen[rng.below(50)]++ == 0;
    sum += distinct;
    sum2 += static_cast<double>(distinct) * distinct;
  }
  const double m = sum / trials;
  const double se = std::sqrt((sum2 / trials - m * m) / trials);
  CHECK(std::abs(m - distinct_cluster_count(50, 50)) <= 4 * se);
}

TEST_CASE("collision rate from mean NN") {
  CHECK(qhat_from_mean_nn(0.3, 0.3, 1.0).q_hat == 0.0);
  CHECK(qhat_from_mean_nn(1.0, 0.3, 1.0).q_hat == 1.0);
  const auto low = qhat_from_mean_nn(0.25, 0.3, 1.0);
  CHECK(low.q_hat == 0.0);
  CHECK(low.raw < 0.0);
  CHECK(low.negative_excess);
  CHECK(qhat_from_mean_nn(0.65, 0.3, 1.0).q_hat == doctest::Approx(0.5));
  CHECK_THROWS_AS(qhat_from_mean_nn(0.5, 0.4, 0.4), DomainError);
}

TEST_CASE("K_eff inversion") {
  CHECK(keff_from_qhat(1 - std::exp(-1.0), 101) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(keff_from_qhat(0.0, 100) == std::numeric_limits<double>::infinity());
  CHECK(keff_from_qhat(1.0, 100) == 0.0);
  for (double k : {0.5, 3.0, 1e3, 1e6, 1e9}) {
    for (std::uint64_t n : {2u, 100u, 100000u}) {
      const double q = partner_probability_approx(k, n);
      // 1 - q near the rounding floor leaves too few digits to invert.
      if (q <= 0.0 || 1.0 - q < 1e-4) continue;
      CHECK(keff_from_qhat(q, n) == doctest::Approx(k).epsilon(1e-9));
    }
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double q = 0.0; q <= 1.0; q += 0.01) {
    const double k = keff_from_qhat(std::min(q, 1.0), 1000);
    CHECK(k <= prev);
    prev = k;
  }
  CHECK_THROWS_AS(keff_from_qhat(1.5, 100), DomainError);
}

TEST_CASE("m0 calibration") {
  const std::vector<nnstats::NNReport> one = {report_with(0.31, 1000, 65)};
  CHECK(estimate_m0(one).m0 == 0.31);
  CHECK(estimate_m0(one).se == 0.0);
  const std::vector<nnstats::NNReport> three = {report_with(0.3, 1000, 65), report_with(0.32, 1000, 65),
                                                report_with(0.34, 1000, 65)};
  const auto m = estimate_m0(three);
  CHECK(m.m0 == doctest::Approx(0.32).epsilon(1e-14));
  CHECK(m.references == 3);
  CHECK(m.se == doctest::Approx(0.02 / std::sqrt(3.0)).epsilon(1e-9));
  const std::vector<nnstats::NNReport> mixed = {report_with(0.3, 1000, 65), report_with(0.3, 2000, 65)};
  try {
    estimate_m0(mixed);
    FAIL("expected MismatchError");
  } catch (const MismatchError& e) {
    CHECK(std::string(e.what()).find("2000") != std::string::npos);
  }
  CHECK_THROWS_AS(estimate_m0(std::vector<nnstats::NNReport>{}), DomainError);
}

TEST_CASE("pipeline") {
  const auto ref = nullmodel::sample_uniform_sphere(nullmodel::NullModelSpec::uniform(63, 5), 4000);

  SUBCASE("stream equal to reference") {
    const auto e = estimate_keff_pipeline(ref, ref, 1.0, 2000, 9);
    CHECK(e.q_hat == 0.0);
    CHECK(std::isinf(e.k_eff_hat));
    CHECK(e.saturated_low);
    CHECK_FALSE(e.saturated_high);
    CHECK(e.seed == 9);
    CHECK(e.n_meas == 2000);
    CHECK(e.stream_count == 4000);
    CHECK(e.reference_count == 4000);
    CHECK(e.dim == 64);
  }

  SUBCASE("m_plus at or below m0") {
    CHECK_THROWS_AS(estimate_keff_pipeline(ref, ref, 0.1, 1000, 1), DomainError);
  }

  SUBCASE("mismatched calibration") {
    M0Estimate m0;
    m0.m0 = 0.3;
    m0.n_meas = 500;
    m0.dim = 64;
    CHECK_THROWS_AS(estimate_keff_pipeline(ref, m0, 1.0, 1000, 1), MismatchError);
  }

  SUBCASE("recovers K when collisions are moderate") {
    // n_meas close to K keeps q away from 0 and 1.
    const std::size_t k = 1000, n_meas = 1000;
    const auto calib = measure_mean_nn(ref, n_meas, 3);
    const auto m0 = estimate_m0(std::span(&calib, 1));
    std::vector<double> est;
    for (std::uint64_t s = 0; s < 9; ++s) {
      const auto stream = synthetic::duplicate_stream(63, k, 3000, derive_seed(6, "stream", s));
      est.push_back(estimate_keff_pipeline(stream, m0, 1.0, n_meas, s).k_eff_hat);
    }
    std::nth_element(est.begin(), est.begin() + 4, est.end());
    CHECK(est[4] >= k / 1.25);
    CHECK(est[4] <= k * 1.25);
  }
}

}  // TEST_SUITE
