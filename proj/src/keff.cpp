#include "semdup/keff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semdup/error.hpp"
#include "semdup/parallel.hpp"
#include "semdup/rng.hpp"

namespace semdup::keff {

LatentMixture::LatentMixture(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("mixture needs at least one weight");
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("mixture weights must be positive");
  }
  const double total = pairwise_sum(weights_);
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError("mixture weights sum to " + std::to_string(total) + ", not 1");
  }
}

LatentMixture LatentMixture::uniform(std::size_t k) {
  if (k == 0) throw DomainError("uniform mixture needs k >= 1");
  return LatentMixture(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

LatentMixture LatentMixture::zipf(double exponent, std::size_t count) {
  if (count == 0) throw DomainError("zipf mixture needs count >= 1");
  std::vector<double> w(count);
  for (std::size_t z = 0; z < count; ++z) {
    w[z] = std::pow(static_cast<double>(z + 1), -exponent);
  }
  return from_unnormalized(std::move(w));
}

LatentMixture LatentMixture::from_unnormalized(std::vector<double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("mixture weights must be non-negative");
  }
  std::erase(weights, 0.0);
  if (weights.empty()) throw DomainError("mixture needs at least one positive weight");
  const double total = pairwise_sum(weights);
  for (double& w : weights) w /= total;
  return LatentMixture(std::move(weights));
}

double LatentMixture::max_weight() const {
  return *std::max_element(weights_.begin(), weights_.end());
}

double simpson_keff(const LatentMixture& mix) {
  std::vector<double> sq(mix.size());
  std::transform(mix.weights().begin(), mix.weights().end(), sq.begin(),
                 [](double w) { return w * w; });
  return 1.0 / pairwise_sum(sq);
}

double partner_probability_exact(const LatentMixture& mix, std::uint64_t n) {
  if (n < 2) throw DomainError("partner probability needs N >= 2");
  // sum w (1 - (1-w)^{N-1}), which avoids cancellation when q_N is tiny.
  const double m = static_cast<double>(n - 1);
  std::vector<double> terms(mix.size());
  std::transform(mix.weights().begin(), mix.weights().end(), terms.begin(), [m](double w) {
    return w >= 1.0 ? w : -w * std::expm1(m * std::log1p(-w));
  });
  return std::clamp(pairwise_sum(terms), 0.0, 1.0);
}

double partner_probability_approx(double k_eff, std::uint64_t n) {
  if (!(k_eff > 0.0)) throw DomainError("k_eff must be positive");
  if (n < 2) throw DomainError("partner probability needs N >= 2");
  return -std::expm1(-static_cast<double>(n - 1) / k_eff);
}

double distinct_cluster_count(double k, std::uint64_t n) {
  if (!(k >= 1.0)) throw DomainError("cluster count needs K >= 1");
  if (n == 0) return 0.0;
  return -k * std::expm1(static_cast<double>(n) * std::log1p(-1.0 / k));
}

QHat qhat_from_mean_nn(double mean_nn, double m0, double m_plus) {
  if (!(m_plus > m0)) {
    throw DomainError("m_plus (" + std::to_string(m_plus) + ") must exceed m0 (" +
                      std::to_string(m0) + ")");
  }
  QHat q;
  q.raw = (mean_nn - m0) / (m_plus - m0);
  q.negative_excess = q.raw < 0.0;
  q.q_hat = std::clamp(q.raw, 0.0, 1.0);
  return q;
}

double keff_from_qhat(double q_hat, std::uint64_t n_meas) {
  if (n_meas < 2) throw DomainError("n_meas must be at least 2");
  if (!(q_hat >= 0.0 && q_hat <= 1.0)) throw DomainError("q_hat must lie in [0, 1]");
  if (q_hat == 0.0) return std::numeric_limits<double>::infinity();
  if (q_hat == 1.0) return 0.0;
  return static_cast<double>(n_meas - 1) / -std::log1p(-q_hat);
}

M0Estimate estimate_m0(std::span<const nnstats::NNReport> references) {
  if (references.empty()) throw DomainError("no reference reports for m0");
  M0Estimate out;
  out.references = references.size();
  out.n_meas = references.front().pool_size;
  out.dim = references.front().dim;
  std::vector<double> means;
  for (const auto& r : references) {
    if (r.pool_size != out.n_meas) {
      throw MismatchError("reference pool sizes differ: " + std::to_string(out.n_meas) +
                          " vs " + std::to_string(r.pool_size));
    }
    if (r.dim != out.dim) {
      throw MismatchError("reference dimensions differ: " + std::to_string(out.dim) + " vs " +
                          std::to_string(r.dim));
    }
    means.push_back(r.mean_nn_similarity);
  }
  out.m0 = pairwise_mean(means);
  if (means.size() > 1) {
    double ss = 0.0;
    for (double m : means) ss += (m - out.m0) * (m - out.m0);
    const double k = static_cast<double>(means.size());
    out.se = std::sqrt(ss / (k - 1.0) / k);
  }
  return out;
}

KeffEstimate estimate_from_mean_nn(double mean_nn, const M0Estimate& m0, double m_plus,
                                   std::size_t n_meas) {
  const QHat q = qhat_from_mean_nn(mean_nn, m0.m0, m_plus);
  KeffEstimate e;
  e.mean_nn = mean_nn;
  e.m0 = m0.m0;
  e.m0_se = m0.se;
  e.m_plus = m_plus;
  e.n_meas = n_meas;
  e.q_raw = q.raw;
  e.q_hat = q.q_hat;
  e.negative_excess = q.negative_excess;
  e.k_eff_hat = keff_from_qhat(q.q_hat, n_meas);
  e.saturated_low = q.q_hat == 0.0;
  e.saturated_high = q.q_hat == 1.0;
  return e;
}

nnstats::NNReport measure_mean_nn(const EmbeddingSet& set, std::size_t n_meas,
                                  std::uint64_t seed, const PipelineOptions& options) {
  if (n_meas < 2) throw DomainError("n_meas must be at least 2");
  if (n_meas > set.count()) {
    throw DomainError("n_meas " + std::to_string(n_meas) + " exceeds the " +
                      std::to_string(set.count()) + " available rows");
  }
  const auto order =
      nnstats::ladder_subsample_order(set.count(), n_meas, derive_seed(seed, "keff-subsample"));
  EmbeddingSet sub = set.gather(order);
  if (!sub.normalized()) sub = normalize(sub);
  std::vector<std::uint32_t> queries(std::min(n_meas, options.queries_cap));
  std::iota(queries.begin(), queries.end(), 0u);
  nnstats::SearchOptions search;
  search.threads = options.threads;
  if (n_meas <= options.exact_cutoff) return nnstats::nn_exact(sub, queries, search);
  nnstats::LshParams lsh = options.lsh;
  lsh.seed = derive_seed(seed, "keff-lsh");
  const nnstats::LshIndex index(sub, lsh);
  return nnstats::nn_approx(index, queries, search);
}

KeffEstimate estimate_keff_pipeline(const EmbeddingSet& stream, const M0Estimate& m0,
                                    double m_plus, std::size_t n_meas, std::uint64_t seed,
                                    const PipelineOptions& options) {
  if (m0.n_meas != n_meas) {
    throw MismatchError("m0 was calibrated at N_meas = " + std::to_string(m0.n_meas) +
                        " but the stream is measured at " + std::to_string(n_meas));
  }
  if (m0.dim != 0 && m0.dim != stream.dim()) {
    throw MismatchError("m0 was calibrated at dim " + std::to_string(m0.dim) +
                        " but the stream has dim " + std::to_string(stream.dim()));
  }
  if (!(m_plus > m0.m0)) {
    throw DomainError("m_plus (" + std::to_string(m_plus) + ") must exceed m0 (" +
                      std::to_string(m0.m0) + ")");
  }
  const auto report = measure_mean_nn(stream, n_meas, seed, options);
  KeffEstimate e = estimate_from_mean_nn(report.mean_nn_similarity, m0, m_plus, n_meas);
  e.seed = seed;
  e.stream_count = stream.count();
  e.dim = stream.dim();
  e.index_kind = report.index_kind;
  return e;
}

KeffEstimate estimate_keff_pipeline(const EmbeddingSet& stream, const EmbeddingSet& reference,
                                    double m_plus, std::size_t n_meas, std::uint64_t seed,
                                    const PipelineOptions& options) {
  if (stream.dim() != reference.dim()) {
    throw MismatchError("stream dim " + std::to_string(stream.dim()) +
                        " differs from reference dim " + std::to_string(reference.dim()));
  }
  const auto ref = measure_mean_nn(reference, n_meas, seed, options);
  const M0Estimate m0 = estimate_m0(std::span(&ref, 1));
  KeffEstimate e = estimate_keff_pipeline(stream, m0, m_plus, n_meas, seed, options);
  e.reference_count = reference.count();
  return e;
}

}  // namespace semdup::keff
