#include <doctest.h>

#include <cmath>
#include <numbers>

#include "semdup/error.hpp"
#include "semdup/nullmodel.hpp"
#include "semdup/rng.hpp"
#include "semdup/specfn.hpp"

using namespace semdup;
using namespace semdup::specfn;

namespace {

// Ascending series for I_nu(kappa), 200 terms in long double.
long double bessel_series(long double nu, long double kappa) {
  long double term = std::pow(kappa / 2, nu) / std::tgamma(nu + 1);
  long double sum = term;
  const long double q = kappa * kappa / 4;
  for (int k = 1; k < 200; ++k) {
    term *= q / (k * (nu + k));
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_SUITE("specfn") {

TEST_CASE("ln_gamma reference values") {
  CHECK(ln_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ln_gamma(0.5) == doctest::Approx(0.5 * std::log(std::numbers::pi)).epsilon(1e-14));
  CHECK(ln_gamma(10.0) == doctest::Approx(12.801827480081469611).epsilon(1e-14));
  CHECK_THROWS_AS(ln_gamma(0.0), DomainError);
  CHECK_THROWS_AS(ln_gamma(-1.5), DomainError);
}

TEST_CASE("beta function") {
  CHECK(beta_fn(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(beta_fn(0.5, 0.5) == doctest::Approx(std::numbers::pi).epsilon(1e-14));
  CHECK(beta_fn(2, 3) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  CHECK(ln_beta(2, 3) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
  CHECK_THROWS_AS(beta_fn(0, 1), DomainError);
}

TEST_CASE("regularized incomplete beta") {
  CHECK(reg_inc_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(reg_inc_beta(1.0, 2.0, 3.0) == 1.0);
  CHECK(reg_inc_beta(0.5, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(reg_inc_beta(0.75, 0.5, 1.0) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));
  CHECK_THROWS_AS(reg_inc_beta(1.2, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(reg_inc_beta(0.5, 0.0, 1.0), DomainError);

  SUBCASE("explicit complement agrees") {
    CHECK(reg_inc_beta(0.3, 0.7, 4.0, 0.5) == doctest::Approx(reg_inc_beta(0.3, 4.0, 0.5)).epsilon(1e-14));
  }
}

TEST_CASE("incomplete beta reflection holds on random arguments") {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform();
    const double a = 0.05 + 60.0 * rng.uniform();
    const double b = 0.05 + 60.0 * rng.uniform();
    const double s = reg_inc_beta(x, a, b) + reg_inc_beta(1.0 - x, b, a);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("incomplete beta derivative matches the beta density") {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const double x = 0.05 + 0.9 * rng.uniform();
    const double a = 0.5 + 10.0 * rng.uniform();
    const double b = 0.5 + 10.0 * rng.uniform();
    const double h = 1e-4;
    // Five-point stencil.
    const double fd = (reg_inc_beta(x - 2 * h, a, b) - 8 * reg_inc_beta(x - h, a, b) +
                       8 * reg_inc_beta(x + h, a, b) - reg_inc_beta(x + 2 * h, a, b)) /
                      (12 * h);
    const double density = std::exp((a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - ln_beta(a, b));
    if (density < 1e-6) continue;
    CHECK(std::abs(fd - density) / density <= 1e-6);
  }
}

TEST_CASE("log Bessel I reference values") {
  CHECK(log_bessel_i(0.0, 0.0) == 0.0);
  CHECK(std::isinf(log_bessel_i(1.0, 0.0)));
  CHECK(log_bessel_i(0.5, 1.0) ==
        doctest::Approx(std::log(std::sinh(1.0) * std::sqrt(2.0 / std::numbers::pi))).epsilon(1e-14));
  CHECK(log_bessel_i(2.0, 5.0) == doctest::Approx(2.8625216847021057).epsilon(1e-13));
  CHECK_THROWS_AS(log_bessel_i(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(log_bessel_i(1.0, -1.0), DomainError);
}

TEST_CASE("log Bessel I in the asymptotic region") {
  // High-precision references.
  struct Case { double nu, kappa, expected; };
  const Case cases[] = {
      {3.5, 100.0, 96.718179510766068624}, {50.0, 60.0, 37.080741151989984597},
      {0.5, 1000.0, 995.62718382730425873}, {10.0, 30.0, 25.705719808142329430},
      {20.0, 45.0, 37.759234167328441471}, {100.0, 500.0, 485.99712218134414574},
      {0.0, 700.0, 695.80569999844344908},
  };
  for (const auto& c : cases) {
    CAPTURE(c.nu);
    CAPTURE(c.kappa);
    CHECK(log_bessel_i(c.nu, c.kappa) == doctest::Approx(c.expected).epsilon(1e-12));
  }
}

TEST_CASE("log Bessel I matches a 200-term series up to kappa 50") {
  for (double nu : {0.0, 0.5, 1.0, 3.5, 7.0, 15.5, 31.5}) {
    for (double kappa = 0.25; kappa <= 50.0; kappa += 0.75) {
      const long double ref = bessel_series(nu, kappa);
      const double got = std::exp(log_bessel_i(nu, kappa));
      CAPTURE(nu);
      CAPTURE(kappa);
      CHECK(std::abs(got - static_cast<double>(ref)) / static_cast<double>(ref) <= 1e-10);
    }
  }
}

TEST_CASE("log Bessel I is continuous across the series/asymptotic switch") {
  for (double nu : {0.0, 3.5, 31.5, 45.0}) {
    const double k = std::max(nu + 10.0, 40.0);
    const double below = log_bessel_i(nu, std::nextafter(k, 0.0));
    const double above = log_bessel_i(nu, k);
    CHECK(std::abs(above - below) <= 1e-11 * std::abs(above));
  }
}

TEST_CASE("vMF normalizer") {
  for (int d : {1, 2, 5, 64}) CHECK(vmf_normalizer(d, 0.0) == 1.0);
  CHECK(vmf_normalizer(2, 1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
  CHECK(vmf_normalizer(2, 10.0) == doctest::Approx(1101.3232874703393).epsilon(1e-13));
  CHECK(vmf_normalizer(8, 20.0) == doctest::Approx(117107.69663031044).epsilon(1e-12));
  CHECK(vmf_normalizer(64, 30.0) == doctest::Approx(572.18555138259640).epsilon(1e-12));
  // Small-kappa behaviour: Z = 1 + kappa^2 / (2 (d+1)) + ...
  CHECK(vmf_normalizer(8, 1e-4) - 1.0 == doctest::Approx(1e-8 / 18.0).epsilon(1e-6));
  CHECK_THROWS_AS(vmf_normalizer(0, 1.0), DomainError);
  CHECK_THROWS_AS(vmf_normalizer(3, -1.0), DomainError);
}

TEST_CASE("vMF normalizer matches Monte Carlo over the sphere") {
  for (auto [d, kappa] : {std::pair{3, 2.0}, std::pair{8, 4.0}}) {
    const auto set = nullmodel::sample_uniform_sphere(nullmodel::NullModelSpec::uniform(d, 5), 1000000);
    const std::size_t last = set.dim() - 1;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < set.count(); ++i) {
      const double v = std::exp(kappa * set.row(i)[last]);
      sum += v;
      sum2 += v * v;
    }
    const double n = static_cast<double>(set.count());
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CAPTURE(d);
    CHECK(std::abs(mean - vmf_normalizer(d, kappa)) <= 4.0 * se);
  }
}

TEST_CASE("Bessel ratio") {
  // I_{3/2}/I_{1/2} = coth(k) - 1/k.
  for (double k : {0.1, 1.0, 10.0, 100.0}) {
    CHECK(bessel_ratio(0.5, k) == doctest::Approx(1.0 / std::tanh(k) - 1.0 / k).epsilon(1e-11));
  }
  CHECK(bessel_ratio(2.0, 0.0) == 0.0);
}

TEST_CASE("outputs are bit-identical on repeat calls") {
  CHECK(reg_inc_beta(0.37, 3.5, 0.5) == reg_inc_beta(0.37, 3.5, 0.5));
  CHECK(log_bessel_i(7.5, 123.0) == log_bessel_i(7.5, 123.0));
}

}  // TEST_SUITE
