#include "semdup/nullmodel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "semdup/error.hpp"
#include "semdup/rng.hpp"
#include "semdup/specfn.hpp"

namespace semdup::nullmodel {
namespace {

void require_d(int d, const char* fn) {
  if (d < 1) throw DomainError(std::string(fn) + ": d must be >= 1");
}

void require_pool(std::uint64_t N, const char* fn) {
  if (N < 2) throw DomainError(std::string(fn) + ": N must be >= 2");
}

// (1 - p)^m without underflow bias for large m.
double survival_power(double p, double m) {
  if (m == 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  return std::exp(m * std::log1p(-p));
}

// Adaptive G-K over consecutive breakpoints; accumulates the error estimate.
template <class F>
double integrate_pieces(F&& f, std::vector<double> points, double& error) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    double piece_error = 0.0;
    total += Quad::integrate(f, points[i], points[i + 1], 25, 1e-10, &piece_error);
    error += piece_error;
  }
  return total;
}

void fill_row(std::span<float> row, const std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t k = 0; k < v.size(); ++k) row[k] = static_cast<float>(v[k] * inv);
}

}  // namespace

std::string_view to_string(Family f) { return f == Family::Uniform ? "uniform" : "vmf"; }

Family parse_family(std::string_view name) {
  if (name == "uniform") return Family::Uniform;
  if (name == "vmf") return Family::Vmf;
  throw DomainError("unknown null-model family '" + std::string(name) + "'");
}

std::string_view to_string(Regime r) {
  return r == Regime::ExactIntegral ? "exact_integral" : "power_law_asymptotic";
}

NullModelSpec NullModelSpec::uniform(int d, std::uint64_t seed) {
  NullModelSpec s;
  s.d = d;
  s.family = Family::Uniform;
  s.seed = seed;
  return s;
}

NullModelSpec NullModelSpec::vmf(int d, double kappa, std::uint64_t seed,
                                 std::vector<double> mean_direction) {
  NullModelSpec s;
  s.d = d;
  s.family = Family::Vmf;
  s.kappa = kappa;
  s.seed = seed;
  s.mean_direction = std::move(mean_direction);
  return s;
}

void NullModelSpec::validate() const {
  require_d(d, "NullModelSpec");
  if (family != Family::Vmf) return;
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw DomainError("NullModelSpec: kappa must be finite and >= 0");
  }
  if (mean_direction.empty()) return;
  if (mean_direction.size() != ambient_dim()) {
    throw DomainError("NullModelSpec: mean direction must have d+1 = " +
                      std::to_string(ambient_dim()) + " components");
  }
  double sq = 0.0;
  for (double x : mean_direction) sq += x * x;
  if (std::fabs(std::sqrt(sq) - 1.0) > 1e-9) {
    throw DomainError("NullModelSpec: mean direction must have unit norm");
  }
}

std::vector<double> NullModelSpec::resolved_mean_direction() const {
  if (!mean_direction.empty()) return mean_direction;
  std::vector<double> e(ambient_dim(), 0.0);
  e.back() = 1.0;
  return e;
}

double cap_probability(int d, double T) {
  require_d(d, "cap_probability");
  if (std::isnan(T) || T < -1.0 || T > 1.0) {
    throw DomainError("cap_probability: T must lie in [-1, 1]");
  }
  if (T == 0.0) return 0.5;
  if (T == 1.0) return 0.0;
  if (T == -1.0) return 1.0;
  if (T < 0.0) return 1.0 - cap_probability(d, -T);
  const double y = (1.0 - T) * (1.0 + T);
  return 0.5 * specfn::reg_inc_beta(y, T * T, 0.5 * d, 0.5);
}

double cap_probability_angle(int d, double theta) {
  require_d(d, "cap_probability_angle");
  if (std::isnan(theta) || theta < 0.0 || theta > M_PI) {
    throw DomainError("cap_probability_angle: theta must lie in [0, pi]");
  }
  if (theta == 0.0) return 0.0;
  if (theta == M_PI) return 1.0;
  if (theta > M_PI_2) return 1.0 - cap_probability_angle(d, M_PI - theta);
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return 0.5 * specfn::reg_inc_beta(s * s, c * c, 0.5 * d, 0.5);
}

double cap_constant(int d) {
  require_d(d, "cap_constant");
  return 1.0 / (d * specfn::beta_fn(0.5 * d, 0.5));
}

double cap_constant_gamma_form(int d) {
  require_d(d, "cap_constant");
  return std::exp(specfn::ln_gamma(0.5 * (d + 1)) - specfn::ln_gamma(0.5 * d)) /
         (d * std::sqrt(M_PI));
}

double no_cap_hit_probability(int d, double T, std::uint64_t k) {
  return survival_power(cap_probability(d, T), static_cast<double>(k));
}

double nn_similarity_cdf(int d, std::uint64_t N, double T) {
  require_pool(N, "nn_similarity_cdf");
  return no_cap_hit_probability(d, T, N - 1);
}

EmbeddingSet sample_uniform_sphere(const NullModelSpec& spec, std::size_t n) {
  spec.validate();
  if (spec.family != Family::Uniform) {
    throw DomainError("sample_uniform_sphere: spec family must be uniform");
  }
  if (n < 1) throw DomainError("sample_uniform_sphere: n must be >= 1");
  const std::size_t dim = spec.ambient_dim();
  EmbeddingSet out(dim, n);
  Rng rng(spec.seed);
  std::vector<double> g(dim);
  for (std::size_t i = 0; i < n; ++i) {
    double sq;
    do {
      sq = 0.0;
      for (double& x : g) {
        x = rng.normal();
        sq += x * x;
      }
    } while (sq == 0.0);
    fill_row(out.row(i), g);
  }
  out.set_normalized(true);
  return out;
}

EmbeddingSet sample_vmf(const NullModelSpec& spec, std::size_t n) {
  spec.validate();
  if (spec.family != Family::Vmf) throw DomainError("sample_vmf: spec family must be vmf");
  if (n < 1) throw DomainError("sample_vmf: n must be >= 1");
  const std::size_t dim = spec.ambient_dim();
  const std::vector<double> mu = spec.resolved_mean_direction();
  const double kappa = spec.kappa;
  const double m = static_cast<double>(spec.d);  // ambient dim - 1

  // Wood (1994): envelope parameters for the marginal of w = <x, mu>.
  const double b = m / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m * m));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m * std::log1p(-x0 * x0);

  EmbeddingSet out(dim, n);
  Rng rng(spec.seed);
  std::vector<double> v(dim), x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    double w;
    for (;;) {
      const double z = rng.beta(0.5 * m, 0.5 * m);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = rng.uniform_open();
      if (kappa * w + m * std::log1p(-x0 * w) - c >= std::log(u)) break;
    }
    w = std::clamp(w, -1.0, 1.0);

    double vsq;
    do {
      double proj = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        v[k] = rng.normal();
        proj += v[k] * mu[k];
      }
      vsq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        v[k] -= proj * mu[k];
        vsq += v[k] * v[k];
      }
    } while (vsq < 1e-300);
    const double tangent = std::sqrt(std::max(0.0, 1.0 - w * w)) / std::sqrt(vsq);
    for (std::size_t k = 0; k < dim; ++k) x[k] = w * mu[k] + tangent * v[k];
    fill_row(out.row(i), x);
  }
  out.set_normalized(true);
  return out;
}

EmbeddingSet sample(const NullModelSpec& spec, std::size_t n) {
  return spec.family == Family::Uniform ? sample_uniform_sphere(spec, n) : sample_vmf(spec, n);
}

NNTheoryResult expected_nn_similarity_uniform(int d, std::uint64_t N) {
  require_d(d, "expected_nn_similarity_uniform");
  require_pool(N, "expected_nn_similarity_uniform");
  const double m = static_cast<double>(N - 1);

  // Breakpoints around the asymptotic location of the transition so the
  // adaptive rule cannot step over a narrow feature near t = 1.
  const NNTheoryResult asym = nn_power_law_asymptotics(d, N);
  std::vector<double> t_points{-1.0, 0.0, 1.0};
  std::vector<double> theta_points{0.0, M_PI_2, M_PI};
  for (double f : {0.1, 1.0, 10.0}) {
    const double t = 1.0 - f * asym.expected_gap;
    if (t > 0.0 && t < 1.0) t_points.push_back(t);
    const double th = f * asym.expected_angle;
    if (th > 0.0 && th < M_PI_2) theta_points.push_back(th);
  }

  double error = 0.0;
  const double gap = integrate_pieces(
      [&](double t) { return survival_power(cap_probability(d, t), m); }, t_points, error);
  const double angle = integrate_pieces(
      [&](double th) { return survival_power(cap_probability_angle(d, th), m); },
      theta_points, error);
  if (!(error <= 1e-8)) {
    throw ConvergenceError("expected_nn_similarity_uniform: quadrature error estimate " +
                           std::to_string(error) + " exceeds 1e-8");
  }
  NNTheoryResult r;
  r.expected_gap = gap;
  r.expected_nn_similarity = 1.0 - gap;
  r.expected_angle = angle;
  r.regime = Regime::ExactIntegral;
  r.quadrature_error = error;
  return r;
}

NNTheoryResult nn_power_law_asymptotics(int d, std::uint64_t N) {
  require_d(d, "nn_power_law_asymptotics");
  require_pool(N, "nn_power_law_asymptotics");
  const double dd = static_cast<double>(d);
  const double log_base = std::log(static_cast<double>(N - 1)) + std::log(cap_constant(d));
  NNTheoryResult r;
  r.expected_angle = std::exp(specfn::ln_gamma(1.0 + 1.0 / dd) - log_base / dd);
  r.expected_gap = 0.5 * std::exp(specfn::ln_gamma(1.0 + 2.0 / dd) - 2.0 * log_base / dd);
  r.expected_nn_similarity = 1.0 - r.expected_gap;
  r.regime = Regime::PowerLawAsymptotic;
  return r;
}

double log_vmf_moment(int d, double kappa, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("vmf_moment: alpha must lie in (0, 1)");
  return (alpha - 1.0) * specfn::log_vmf_normalizer(d, kappa) +
         specfn::log_vmf_normalizer(d, (1.0 - alpha) * kappa);
}

double vmf_moment(int d, double kappa, double alpha) {
  return std::exp(log_vmf_moment(d, kappa, alpha));
}

NNTheoryResult expected_nn_gap_vmf(int d, double kappa, std::uint64_t N) {
  if (d <= 2) throw DomainError("expected_nn_gap_vmf: requires d > 2");
  NNTheoryResult r = nn_power_law_asymptotics(d, N);
  const double dd = static_cast<double>(d);
  r.expected_gap *= vmf_moment(d, kappa, 2.0 / dd);
  r.expected_angle *= vmf_moment(d, kappa, 1.0 / dd);
  r.expected_nn_similarity = 1.0 - r.expected_gap;
  return r;
}

}  // namespace semdup::nullmodel
