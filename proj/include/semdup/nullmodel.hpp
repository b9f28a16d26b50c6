#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "semdup/embedding.hpp"

// Closed-form nearest-neighbour predictions and samplers for points on the
// sphere S^d (embedded in R^{d+1}) under the uniform and von Mises-Fisher laws.
namespace semdup::nullmodel {

enum class Family { Uniform, Vmf };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

struct NullModelSpec {
  int d = 1;  // intrinsic sphere dimension; samples live in R^{d+1}
  Family family = Family::Uniform;
  double kappa = 0.0;                  // ignored for Uniform
  std::vector<double> mean_direction;  // ignored for Uniform; empty means e_{d+1}
  std::uint64_t seed = 0;

  static NullModelSpec uniform(int d, std::uint64_t seed);
  static NullModelSpec vmf(int d, double kappa, std::uint64_t seed,
                           std::vector<double> mean_direction = {});

  std::size_t ambient_dim() const { return static_cast<std::size_t>(d) + 1; }

  // Throws DomainError on d < 1, kappa < 0, or a mean direction with the
  // wrong size or a norm outside 1 +- 1e-9.
  void validate() const;

  // mean_direction, or e_{d+1} if it was left empty.
  std::vector<double> resolved_mean_direction() const;
};

enum class Regime { ExactIntegral, PowerLawAsymptotic };

std::string_view to_string(Regime r);

struct NNTheoryResult {
  double expected_nn_similarity = 0.0;
  double expected_angle = 0.0;  // radians
  double expected_gap = 0.0;
  Regime regime = Regime::ExactIntegral;
  double quadrature_error = 0.0;  // estimated absolute error (exact regime only)
};

// p_d(T) = P(<x, n> >= T) for x uniform on S^d.
double cap_probability(int d, double T);

// Same quantity parameterized by the cap half-angle theta in [0, pi]; keeps
// full relative precision for tiny caps.
double cap_probability_angle(int d, double theta);

// C_d = 1 / (d B(d/2, 1/2)).
double cap_constant(int d);
// C_d = Γ((d+1)/2) / (d sqrt(pi) Γ(d/2)); equal to cap_constant up to rounding.
double cap_constant_gamma_form(int d);

// P(max_i <x_i, n> < T) = (1 - p_d(T))^k.
double no_cap_hit_probability(int d, double T, std::uint64_t k);

// P(M_i < T) = (1 - p_d(T))^{N-1} for N uniform points.
double nn_similarity_cdf(int d, std::uint64_t N, double T);

// n points uniform on S^d, rows normalized.
EmbeddingSet sample_uniform_sphere(const NullModelSpec& spec, std::size_t n);

// n points from vMF(mu, kappa): Wood's rejection sampler for w = <x, mu>
// plus a uniform tangent direction.
EmbeddingSet sample_vmf(const NullModelSpec& spec, std::size_t n);

// Dispatches on spec.family.
EmbeddingSet sample(const NullModelSpec& spec, std::size_t n);

// E[M_1] = -1 + int_{-1}^{1} (1 - (1 - p_d(t))^{N-1}) dt, by adaptive
// Gauss-Kronrod quadrature split at t = 0. The gap is integrated directly as
// int (1 - p_d(t))^{N-1} dt so it keeps relative accuracy when it is small.
// Throws ConvergenceError if the error estimate exceeds 1e-8.
NNTheoryResult expected_nn_similarity_uniform(int d, std::uint64_t N);

// Large-N power law:
//   E[Theta] = Γ(1+1/d) ((N-1) C_d)^{-1/d},  E[Delta] = Γ(1+2/d)/2 ((N-1) C_d)^{-2/d}.
NNTheoryResult nn_power_law_asymptotics(int d, std::uint64_t N);

// E[f^{-alpha}] = Z_d(kappa)^{alpha-1} Z_d((1-alpha) kappa) for X ~ vMF, alpha in (0,1).
double vmf_moment(int d, double kappa, double alpha);
double log_vmf_moment(int d, double kappa, double alpha);

// Power-law gap and angle multiplied by the vMF density moments (d > 2).
NNTheoryResult expected_nn_gap_vmf(int d, double kappa, std::uint64_t N);

}  // namespace semdup::nullmodel
