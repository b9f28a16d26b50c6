#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "semdup/error.hpp"
#include "semdup/rng.hpp"
#include "semdup/scaling.hpp"

using namespace semdup;
using namespace semdup::scaling;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<DeltaPoint> planted_plane(double a, double beta, double gamma, double noise = 0.0,
                                      Rng* rng = nullptr) {
  std::vector<DeltaPoint> out;
  for (double c : {1e1, 1e2, 1e3, 1e4}) {
    for (double k : {1e3, 1e4, 1e5, 1e6}) {
      double d = a * std::pow(c, beta) * std::pow(k, -gamma);
      if (noise > 0) d *= std::exp(noise * rng->normal());
      out.push_back({c, k, d, 0, 0, Split::Eval});
    }
  }
  return out;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("scaling") {

TEST_CASE("fractional loss increase") {
  const std::vector<RunRecord> runs = {{10, 1000, 1.1, Split::Eval, {}}, {10, 2000, 1.0, Split::Eval, {}}};
  const std::vector<RunRecord> base = {{10, kInf, 1.0, Split::Eval, {}}};
  const auto d = frac_increase(runs, base);
  REQUIRE(d.size() == 2);
  CHECK(d[0].delta == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(d[1].delta == 0.0);
  CHECK(d[0].baseline_loss == 1.0);

  const std::vector<RunRecord> orphan = {{10, 1000, 1.1, Split::Eval, {}}, {37, 1000, 1.1, Split::Eval, {}}};
  try {
    frac_increase(orphan, base);
    FAIL("expected MismatchError");
  } catch (const MismatchError& e) {
    CHECK(std::string(e.what()).find("C=37") != std::string::npos);
  }
  // Baselines only pair within a split.
  const std::vector<RunRecord> train = {{10, 1000, 1.1, Split::Train, {}}};
  CHECK_THROWS_AS(frac_increase(train, base), MismatchError);
  // Compute matched to 1e-9 relative.
  const std::vector<RunRecord> near = {{10 * (1 + 1e-12), 1000, 1.1, Split::Eval, {}}};
  CHECK(frac_increase(near, base).size() == 1);
}

TEST_CASE("run CSV parsing") {
  const auto runs = parse_runs("split,loss,compute,pool_size,keff_hat\neval,2.5,1e18,inf,\ntrain,2.7,1e18,1000,950.5\n");
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].is_baseline());
  CHECK(runs[0].split == Split::Eval);
  CHECK_FALSE(runs[0].keff_hat.has_value());
  CHECK(runs[1].pool_size == 1000);
  CHECK(runs[1].keff_hat.value() == 950.5);
  CHECK(runs[1].split == Split::Train);
  CHECK_THROWS_AS(parse_runs("compute,pool_size,loss\n1,2,3\n"), FormatError);
  CHECK_THROWS_AS(parse_runs("compute,pool_size,loss,split\n1,2,x,eval\n"), FormatError);
  CHECK_THROWS_AS(parse_runs("compute,pool_size,loss,split\n1,2,3,test\n"), FormatError);
  CHECK_THROWS_AS(parse_runs("compute,pool_size,loss,split\n-1,2,3,eval\n"), FormatError);
  CHECK_THROWS_AS(parse_runs(""), FormatError);
}

TEST_CASE("one-dimensional power law") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(3 * v * v);
  const auto f = fit_power_law(x, y);
  CHECK(f.coefficient == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.exponent == doctest::Approx(2.0).epsilon(1e-10));
  const std::vector<double> flat(5, 4.2);
  CHECK(std::abs(fit_power_law(x, flat).exponent) <= 1e-12);

  Rng rng(1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 50; ++i) {
    const double v = std::pow(10.0, 4.0 * i / 49.0);
    xs.push_back(v);
    ys.push_back(0.5 * std::pow(v, -0.25) * std::exp(0.01 * rng.normal()));
  }
  CHECK(std::abs(fit_power_law(xs, ys).exponent + 0.25) <= 0.02);
  const std::vector<double> bad = {1, -2, 3, 4, 5};
  CHECK_THROWS_AS(fit_power_law(bad, y), FitError);
}

TEST_CASE("plane law") {
  const auto pts = planted_plane(2.0, 0.8, 1.0);
  const auto f = fit_plane_law(pts);
  CHECK(f.a == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f.beta == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(f.gamma == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.residuals.size() == f.n_points);
  CHECK(f.n_points == 16);
  CHECK(f.method == "ols");
  CHECK(f.mean_abs_rel_err <= 1e-9);

  SUBCASE("2% noise, 100 trials") {
    Rng rng(2);
    std::vector<double> gammas;
    for (int t = 0; t < 100; ++t) gammas.push_back(fit_plane_law(planted_plane(2.0, 0.8, 1.0, 0.02, &rng)).gamma);
    CHECK(std::abs(median(gammas) - 1.0) <= 0.05);
  }

  SUBCASE("single K is rank deficient") {
    std::vector<DeltaPoint> one_k;
    for (const auto& p : pts) {
      if (p.pool_size == 1e4) one_k.push_back(p);
    }
    CHECK_THROWS_AS(fit_plane_law(one_k), FitError);
  }

  SUBCASE("collinear ln C and ln K is rank deficient") {
    std::vector<DeltaPoint> diag;
    for (double c : {1.0, 10.0, 100.0, 1000.0}) diag.push_back({c, 10 * c, 0.1, 0, 0, Split::Eval});
    CHECK_THROWS_AS(fit_plane_law(diag), FitError);
  }

  SUBCASE("non-positive deltas are excluded and counted") {
    auto with_zero = pts;
    with_zero.push_back({5.0, 5e3, 0.0, 0, 0, Split::Eval});
    with_zero.push_back({5.0, 5e3, -0.01, 0, 0, Split::Eval});
    const auto g = fit_plane_law(with_zero);
    CHECK(g.excluded_nonpositive == 2);
    CHECK(g.n_points == 16);
  }

  SUBCASE("weights") {
    std::vector<double> w(pts.size(), 2.0);
    const auto g = fit_plane_law(pts, w);
    CHECK(g.method == "wls");
    CHECK(g.gamma == doctest::Approx(1.0).epsilon(1e-9));
    std::vector<double> short_w(3, 1.0);
    CHECK_THROWS_AS(fit_plane_law(pts, short_w), FitError);
  }
}

TEST_CASE("plane law invariances") {
  Rng rng(3);
  const auto pts = planted_plane(0.7, 0.3, 0.6, 0.05, &rng);
  const auto base = fit_plane_law(pts);

  auto shuffled = pts;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[2], shuffled[9]);
  const auto s = fit_plane_law(shuffled);
  CHECK(s.a == doctest::Approx(base.a).epsilon(1e-12));
  CHECK(s.beta == doctest::Approx(base.beta).epsilon(1e-12));
  CHECK(s.gamma == doctest::Approx(base.gamma).epsilon(1e-12));

  auto scaled = pts;
  for (auto& p : scaled) p.delta *= 3.5;
  const auto c = fit_plane_law(scaled);
  CHECK(c.a == doctest::Approx(3.5 * base.a).epsilon(1e-10));
  CHECK(c.beta == doctest::Approx(base.beta).epsilon(1e-10));
  CHECK(c.gamma == doctest::Approx(base.gamma).epsilon(1e-10));

  auto units = pts;
  for (auto& p : units) p.compute *= 1e6;
  const auto u = fit_plane_law(units);
  CHECK(u.a == doctest::Approx(base.a * std::pow(1e6, -base.beta)).epsilon(1e-9));
  CHECK(u.beta == doctest::Approx(base.beta).epsilon(1e-10));
  CHECK(u.gamma == doctest::Approx(base.gamma).epsilon(1e-10));
}

TEST_CASE("ratio law") {
  std::vector<DeltaPoint> pts;
  for (double c : {1e2, 1e4, 1e6}) {
    for (double k : {10.0, 100.0, 1000.0}) pts.push_back({c, k, std::pow(std::sqrt(c) / k, 0.7), 0, 0, Split::Eval});
  }
  const auto r = fit_ratio_law(pts);
  CHECK(r.eta == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(1e-9));

  for (auto& p : pts) p.delta = 0.04;
  CHECK(std::abs(fit_ratio_law(pts).eta) <= 1e-12);

  const auto plane = planted_plane(2.0, 0.8, 1.0);
  CHECK(fit_ratio_law(plane).log_rss > fit_plane_law(plane).log_rss + 1e-6);

  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto noisy = planted_plane(0.5 + rng.uniform(), rng.uniform(), 0.2 + rng.uniform(), 0.1, &rng);
    CHECK(fit_ratio_law(noisy).log_rss >= fit_plane_law(noisy).log_rss - 1e-12);
  }
}

TEST_CASE("restored loss prediction") {
  PlaneLawFit f;
  f.a = 2.0;
  f.beta = 0.8;
  f.gamma = 1.0;
  const auto flat = [](double) { return 1.5; };
  CHECK(predict_restored_loss(f, flat, 10.0, kInf) == 1.5);
  CHECK(predict_restored_loss(f, flat, 10.0, 100.0) ==
        doctest::Approx(1.5 * (1 + 2 * std::pow(10.0, 0.8) / 100)).epsilon(1e-14));
  CHECK(predict_restored_loss(f, flat, 10.0, 100.0) == doctest::Approx(1.68929).epsilon(1e-5));
  CHECK_THROWS_AS(predict_restored_loss(f, [](double) { return kInf; }, 10.0, 100.0), MismatchError);
  CHECK_THROWS_AS(predict_restored_loss(f, [](double) -> double { throw DomainError("none"); }, 10.0, 100.0),
                  MismatchError);

  SUBCASE("planted round trip") {
    const auto l_inf = [](double c) { return 1.7 + 30.0 * std::pow(c, -0.15); };
    std::vector<RunRecord> runs;
    for (double c : {1e1, 1e2, 1e3, 1e4}) {
      runs.push_back({c, kInf, l_inf(c), Split::Eval, {}});
      for (double k : {1e3, 1e4, 1e5, 1e6}) {
        runs.push_back({c, k, l_inf(c) * (1 + 2.0 * std::pow(c, 0.8) * std::pow(k, -1.0)), Split::Eval, {}});
      }
    }
    const auto deltas = frac_increase(runs);
    const auto g = fit_plane_law(deltas);
    CHECK(g.a == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(g.beta == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(g.gamma == doctest::Approx(1.0).epsilon(1e-6));
    for (const auto& d : deltas) {
      CHECK(d.delta == doctest::Approx(2.0 * std::pow(d.compute, 0.8) / d.pool_size).epsilon(1e-12));
    }
    std::vector<RunRecord> base;
    for (const auto& r : runs) {
      if (r.is_baseline()) base.push_back(r);
    }
    const BaselineCurve curve(base);
    for (double c : {1e2, 1e3}) {
      const double want = l_inf(c) * (1 + 2.0 * std::pow(c, 0.8) / 3e4);
      CHECK(std::abs(predict_restored_loss(g, curve, c, 3e4) - want) / want <= 1e-6);
    }
  }
}

TEST_CASE("baseline curve") {
  const std::vector<RunRecord> base = {{1e2, kInf, 4.0, Split::Eval, {}}, {1e4, kInf, 2.0, Split::Eval, {}}};
  const BaselineCurve curve(base);
  CHECK(curve.is_exact(1e2));
  CHECK(curve(1e4) == 2.0);
  CHECK_FALSE(curve.is_exact(1e3));
  CHECK(curve(1e3) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
  CHECK_THROWS_AS(BaselineCurve(std::span<const RunRecord>{}), MismatchError);
  const BaselineCurve single(std::span(base.data(), 1));
  CHECK_THROWS_AS(single(1e3), MismatchError);
}

TEST_CASE("fit error report") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const auto same = fit_error_report(a, a);
  CHECK(same.mean_abs_rel_err == 0.0);
  CHECK(same.median_abs_rel_err == 0.0);
  const std::vector<double> p = {1.1}, q = {1.0};
  const auto one = fit_error_report(p, q);
  CHECK(one.mean_abs_rel_err == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(one.median_abs_rel_err == doctest::Approx(0.1).epsilon(1e-14));
  CHECK_THROWS_AS(fit_error_report(a, q), MismatchError);

  SUBCASE("planted noise level") {
    Rng rng(6);
    std::vector<double> truth, pred;
    const double sigma = 0.03;
    for (int i = 0; i < 20000; ++i) {
      truth.push_back(1.0 + rng.uniform());
      pred.push_back(truth.back() * std::exp(sigma * rng.normal()));
    }
    // |exp(s Z) - 1| has median ~ s * 0.6745 for small s.
    CHECK(fit_error_report(pred, truth).median_abs_rel_err == doctest::Approx(sigma * 0.67449).epsilon(0.05));
  }
}

}  // TEST_SUITE
