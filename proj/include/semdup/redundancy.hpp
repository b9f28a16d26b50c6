#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "semdup/keff.hpp"

namespace semdup::redundancy {

// g = mu + delta_z + xi with z uniform over k clusters. delta_z is a random
// unit direction scaled to energy rho * sigma2; xi is isotropic Gaussian with
// E|xi|^2 = (1 - rho) * sigma2; mu has norm global_mean_norm.
struct GradientClusterModel {
  std::size_t dim = 64;
  std::size_t k = 16;
  double sigma2 = 1.0;
  double rho = 0.5;
  double global_mean_norm = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClusterSample {
  std::size_t dim = 0;
  std::vector<double> vectors;  // n x dim, row-major
  std::vector<std::uint32_t> labels;
  std::vector<double> mean;  // the mu used

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
};

ClusterSample sample_cluster_gradients(const GradientClusterModel& model, std::size_t n);

// Mean within-cluster cross inner product of globally centered vectors over
// their mean squared centered norm, clipped to [0, 1]. Needs at least two
// clusters with two or more members (DomainError otherwise).
double estimate_rho(std::span<const double> vectors, std::size_t dim,
                    std::span<const std::uint32_t> labels);
double estimate_rho(const ClusterSample& sample);

// n / (1 + rho (n - 1) / k).
double effective_sample_size(double n, double k, double rho);

// sigma2 / n * (1 + rho (n - 1) / k).
double predicted_mean_gradient_energy(double sigma2, double n, double k, double rho);

struct VarianceCheck {
  double empirical = 0.0;
  double se = 0.0;
  double predicted = 0.0;
  std::size_t replicates = 0;

  // |empirical - predicted| <= z * max(se, 1e-9 * predicted).
  bool within(double z = 4.0) const;
};

// Monte-Carlo E|g_bar_n - mu|^2. Every replicate draws fresh cluster
// directions from derive_seed(seed, "replicate", r), so cross-cluster terms
// vanish in expectation. Needs replicates >= 30.
VarianceCheck verify_variance_saturation(const GradientClusterModel& model, std::size_t n,
                                         std::size_t replicates);

// Unseen mass sum_z w_z (1 - w_z)^n.
double hutter_excess_risk(const keff::LatentMixture& mix, std::uint64_t n);

struct DegradationPoint {
  double n = 0.0;
  double n_eff = 0.0;
  double reuse = 0.0;      // rho n / k
  double l_finite = 0.0;   // L* + B n_eff^-alpha
  double l_inf = 0.0;      // L* + B n^-alpha
  double delta = 0.0;      // B n^-a ((1 + reuse)^a - 1) / (L* + B n^-a)
  double delta_exact = 0.0;  // (l_finite - l_inf) / l_inf
};

std::vector<DegradationPoint> hutter_degradation_curve(double k_eff, double rho,
                                                       std::span<const double> n_grid,
                                                       double alpha, double l_star, double b);

// Population-sd z-score (mean(pos) - mean(neg)) / sd(neg).
double zscore(std::span<const double> positives, std::span<const double> negatives);

// Mann-Whitney AUC with half credit for ties.
double auc(std::span<const double> positives, std::span<const double> negatives);

}  // namespace semdup::redundancy
