#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semdup/embedding.hpp"
#include "semdup/nnstats.hpp"

namespace semdup::keff {

// Discrete latent mixture {w_z}: positive weights summing to 1 +- 1e-9.
class LatentMixture {
 public:
  explicit LatentMixture(std::vector<double> weights);

  static LatentMixture uniform(std::size_t k);
  // w_z proportional to z^{-exponent}, z = 1..count.
  static LatentMixture zipf(double exponent, std::size_t count);
  // Normalizes non-negative weights; zero entries are dropped.
  static LatentMixture from_unnormalized(std::vector<double> weights);

  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double max_weight() const;

 private:
  std::vector<double> weights_;
};

// 1 / sum w_z^2.
double simpson_keff(const LatentMixture& mix);

// q_N = 1 - sum_z w_z (1 - w_z)^{N-1}.
double partner_probability_exact(const LatentMixture& mix, std::uint64_t n);

// 1 - exp(-(N-1)/k_eff).
double partner_probability_approx(double k_eff, std::uint64_t n);

// K (1 - (1 - 1/K)^n): expected distinct clusters hit by n uniform draws.
double distinct_cluster_count(double k, std::uint64_t n);

struct QHat {
  double q_hat = 0.0;  // clipped to [0, 1]
  double raw = 0.0;    // before clipping
  bool negative_excess = false;
};

// (mean_nn - m0) / (m_plus - m0), clipped. Throws DomainError unless m_plus > m0.
QHat qhat_from_mean_nn(double mean_nn, double m0, double m_plus);

// (n_meas - 1) / (-log(1 - q_hat)); +inf at q_hat = 0 and 0 at q_hat = 1.
double keff_from_qhat(double q_hat, std::uint64_t n_meas);

struct M0Estimate {
  double m0 = 0.0;
  double se = 0.0;  // across references; 0 for a single one
  std::size_t references = 0;
  std::size_t n_meas = 0;
  std::size_t dim = 0;
};

// Mean of the reference M-bar values. Throws DomainError on empty input and
// MismatchError when pool sizes or dimensions differ.
M0Estimate estimate_m0(std::span<const nnstats::NNReport> references);

struct KeffEstimate {
  double q_hat = 0.0;
  double q_raw = 0.0;
  double k_eff_hat = 0.0;  // +inf when q_hat = 0
  double mean_nn = 0.0;    // stream M-bar
  double m0 = 0.0;
  double m0_se = 0.0;
  double m_plus = 1.0;
  std::size_t n_meas = 0;
  bool saturated_low = false;   // q_hat == 0
  bool saturated_high = false;  // q_hat == 1
  bool negative_excess = false;
  // Provenance.
  std::uint64_t seed = 0;
  std::size_t stream_count = 0;
  std::size_t reference_count = 0;
  std::size_t dim = 0;
  nnstats::IndexKind index_kind = nnstats::IndexKind::Exact;
};

// Builds the estimate from a stream M-bar and a calibrated m0.
KeffEstimate estimate_from_mean_nn(double mean_nn, const M0Estimate& m0, double m_plus,
                                   std::size_t n_meas);

struct PipelineOptions {
  std::size_t queries_cap = 100000;
  std::size_t exact_cutoff = 200000;
  nnstats::LshParams lsh;
  unsigned threads = 1;
};

// Draws n_meas rows without replacement from each set (same permutation
// seed for both), measures M-bar on each, and inverts the occupancy model.
KeffEstimate estimate_keff_pipeline(const EmbeddingSet& stream, const EmbeddingSet& reference,
                                    double m_plus, std::size_t n_meas, std::uint64_t seed,
                                    const PipelineOptions& options = {});

// Same, with a precomputed reference calibration (its n_meas must match).
KeffEstimate estimate_keff_pipeline(const EmbeddingSet& stream, const M0Estimate& m0,
                                    double m_plus, std::size_t n_meas, std::uint64_t seed,
                                    const PipelineOptions& options = {});

// M-bar of an n_meas subsample, as used by the pipeline.
nnstats::NNReport measure_mean_nn(const EmbeddingSet& set, std::size_t n_meas,
                                  std::uint64_t seed, const PipelineOptions& options = {});

}  // namespace semdup::keff
