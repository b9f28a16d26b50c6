#include "semdup/redundancy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "semdup/error.hpp"
#include "semdup/parallel.hpp"
#include "semdup/rng.hpp"

namespace semdup::redundancy {

void GradientClusterModel::validate() const {
  if (dim < 1) throw DomainError("gradient dim must be positive");
  if (k < 1) throw DomainError("cluster count must be positive");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("sigma2 must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  if (!(global_mean_norm >= 0.0)) throw DomainError("global mean norm must be non-negative");
}

namespace {

void random_unit(Rng& rng, std::span<double> out) {
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& v : out) {
      v = rng.normal();
      norm2 += v * v;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : out) v *= inv;
}

std::vector<double> mean_vector(const GradientClusterModel& m) {
  std::vector<double> mu(m.dim, 0.0);
  if (m.global_mean_norm > 0.0) {
    Rng rng(derive_seed(m.seed, "global-mean"));
    random_unit(rng, mu);
    for (double& v : mu) v *= m.global_mean_norm;
  }
  return mu;
}

}  // namespace

ClusterSample sample_cluster_gradients(const GradientClusterModel& model, std::size_t n) {
  model.validate();
  if (n == 0) throw DomainError("need at least one sample");
  check_memory_budget(n * model.dim * sizeof(double), "gradient sample");
  const std::size_t dim = model.dim;
  ClusterSample s;
  s.dim = dim;
  s.mean = mean_vector(model);
  s.vectors.resize(n * dim);
  s.labels.resize(n);

  const double shared = std::sqrt(model.rho * model.sigma2);
  const double noise = std::sqrt((1.0 - model.rho) * model.sigma2 / static_cast<double>(dim));
  std::vector<double> directions(model.k * dim);
  {
    Rng rng(derive_seed(model.seed, "cluster-directions"));
    for (std::size_t z = 0; z < model.k; ++z) {
      random_unit(rng, std::span(directions).subspan(z * dim, dim));
    }
  }
  Rng labels(derive_seed(model.seed, "cluster-labels"));
  Rng gauss(derive_seed(model.seed, "idiosyncratic"));
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = static_cast<std::uint32_t>(labels.below(model.k));
    s.labels[i] = z;
    double* g = s.vectors.data() + i * dim;
    const double* d = directions.data() + z * dim;
    for (std::size_t c = 0; c < dim; ++c) {
      g[c] = s.mean[c] + shared * d[c] + (noise > 0.0 ? noise * gauss.normal() : 0.0);
    }
  }
  return s;
}

double estimate_rho(std::span<const double> vectors, std::size_t dim,
                    std::span<const std::uint32_t> labels) {
  if (dim == 0 || vectors.size() != labels.size() * dim) {
    throw DomainError("vectors and labels do not line up");
  }
  const std::size_t n = labels.size();
  std::vector<double> centre(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dim; ++c) centre[c] += vectors[i * dim + c];
  }
  for (double& v : centre) v /= static_cast<double>(n);

  std::unordered_map<std::uint32_t, std::size_t> slot;
  std::vector<std::vector<double>> sums;
  std::vector<double> self_energy;  // per cluster: sum |x|^2
  std::vector<std::size_t> members;
  double total = 0.0;
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = slot.try_emplace(labels[i], sums.size());
    if (fresh) {
      sums.emplace_back(dim, 0.0);
      self_energy.push_back(0.0);
      members.push_back(0);
    }
    const std::size_t c = it->second;
    double e = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      x[k] = vectors[i * dim + k] - centre[k];
      sums[c][k] += x[k];
      e += x[k] * x[k];
    }
    self_energy[c] += e;
    ++members[c];
    total += e;
  }
  const auto usable =
      std::count_if(members.begin(), members.end(), [](std::size_t m) { return m >= 2; });
  if (usable < 2) throw DomainError("need at least two clusters with two or more members");

  double cross = 0.0;
  double pairs = 0.0;
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (members[c] < 2) continue;
    double s2 = 0.0;
    for (double v : sums[c]) s2 += v * v;
    cross += s2 - self_energy[c];
    const double m = static_cast<double>(members[c]);
    pairs += m * (m - 1.0);
  }
  const double mean_energy = total / static_cast<double>(n);
  if (!(mean_energy > 0.0)) return 0.0;
  return std::clamp(cross / pairs / mean_energy, 0.0, 1.0);
}

double estimate_rho(const ClusterSample& sample) {
  return estimate_rho(sample.vectors, sample.dim, sample.labels);
}

double effective_sample_size(double n, double k, double rho) {
  if (!(n >= 1.0)) throw DomainError("n must be at least 1");
  if (!(k > 0.0)) throw DomainError("k must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  return n / (1.0 + rho * (n - 1.0) / k);
}

double predicted_mean_gradient_energy(double sigma2, double n, double k, double rho) {
  return sigma2 / effective_sample_size(n, k, rho);
}

bool VarianceCheck::within(double z) const {
  return std::abs(empirical - predicted) <= z * std::max(se, 1e-9 * predicted);
}

VarianceCheck verify_variance_saturation(const GradientClusterModel& model, std::size_t n,
                                         std::size_t replicates) {
  model.validate();
  if (n == 0) throw DomainError("need at least one sample per replicate");
  if (replicates < 30) throw DomainError("need at least 30 replicates for a standard error");
  const std::size_t dim = model.dim;
  const double shared = std::sqrt(model.rho * model.sigma2);
  const double noise = std::sqrt((1.0 - model.rho) * model.sigma2 / static_cast<double>(dim));

  std::vector<double> energy(replicates);
  std::vector<std::uint32_t> counts(model.k);
  std::vector<double> sum(dim), dir(dim);
  for (std::size_t r = 0; r < replicates; ++r) {
    const std::uint64_t rep_seed = derive_seed(model.seed, "replicate", r);
    Rng labels(derive_seed(rep_seed, "labels"));
    std::fill(counts.begin(), counts.end(), 0u);
    for (std::size_t i = 0; i < n; ++i) ++counts[labels.below(model.k)];

    // Sum of n idiosyncratic terms is Gaussian with n times the variance.
    Rng gauss(derive_seed(rep_seed, "idiosyncratic"));
    const double noise_sum = noise * std::sqrt(static_cast<double>(n));
    for (double& v : sum) v = noise_sum > 0.0 ? noise_sum * gauss.normal() : 0.0;
    if (shared > 0.0) {
      for (std::size_t z = 0; z < model.k; ++z) {
        if (counts[z] == 0) continue;
        Rng dr(derive_seed(rep_seed, "direction", z));
        random_unit(dr, dir);
        const double w = shared * counts[z];
        for (std::size_t c = 0; c < dim; ++c) sum[c] += w * dir[c];
      }
    }
    double e = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double v : sum) e += (v * inv_n) * (v * inv_n);
    energy[r] = e;
  }
  VarianceCheck out;
  out.replicates = replicates;
  out.empirical = pairwise_mean(energy);
  double ss = 0.0;
  for (double e : energy) ss += (e - out.empirical) * (e - out.empirical);
  const double reps = static_cast<double>(replicates);
  out.se = std::sqrt(ss / (reps - 1.0) / reps);
  out.predicted = predicted_mean_gradient_energy(model.sigma2, static_cast<double>(n),
                                                 static_cast<double>(model.k), model.rho);
  return out;
}

double hutter_excess_risk(const keff::LatentMixture& mix, std::uint64_t n) {
  if (n == 0) return 1.0;
  const double m = static_cast<double>(n);
  std::vector<double> terms(mix.size());
  std::transform(mix.weights().begin(), mix.weights().end(), terms.begin(), [m](double w) {
    return w >= 1.0 ? 0.0 : w * std::exp(m * std::log1p(-w));
  });
  return pairwise_sum(terms);
}

std::vector<DegradationPoint> hutter_degradation_curve(double k_eff, double rho,
                                                       std::span<const double> n_grid,
                                                       double alpha, double l_star, double b) {
  if (!(k_eff > 0.0)) throw DomainError("k_eff must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(l_star >= 0.0)) throw DomainError("L* must be non-negative");
  if (!(b > 0.0)) throw DomainError("B must be positive");
  std::vector<DegradationPoint> out;
  for (double n : n_grid) {
    DegradationPoint p;
    p.n = n;
    p.n_eff = effective_sample_size(n, k_eff, rho);
    p.reuse = rho * n / k_eff;
    const double excess = b * std::pow(n, -alpha);
    p.l_inf = l_star + excess;
    p.l_finite = l_star + b * std::pow(p.n_eff, -alpha);
    p.delta = excess * std::expm1(alpha * std::log1p(p.reuse)) / p.l_inf;
    p.delta_exact = (p.l_finite - p.l_inf) / p.l_inf;
    out.push_back(p);
  }
  return out;
}

double zscore(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw DomainError("score sets must be non-empty");
  const double mp = pairwise_mean(positives);
  const double mn = pairwise_mean(negatives);
  double ss = 0.0;
  for (double v : negatives) ss += (v - mn) * (v - mn);
  const double sd = std::sqrt(ss / static_cast<double>(negatives.size()));
  if (!(sd > 0.0)) throw DomainError("negative scores have zero variance");
  return (mp - mn) / sd;
}

double auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw DomainError("score sets must be non-empty");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> all;
  all.reserve(positives.size() + negatives.size());
  for (double v : positives) all.push_back({v, true});
  for (double v : negatives) all.push_back({v, false});
  for (const auto& it : all) {
    if (std::isnan(it.score)) throw DomainError("scores must not be NaN");
  }
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // Twice the Mann-Whitney U, kept integral: each pos/neg pair counts 2 for a
  // win and 1 for a tie.
  double twice_u = 0.0;
  std::size_t negatives_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t pos = 0, neg = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].positive ? pos : neg) += 1;
      ++j;
    }
    twice_u += static_cast<double>(pos) * (2.0 * static_cast<double>(negatives_below) +
                                           static_cast<double>(neg));
    negatives_below += neg;
    i = j;
  }
  return twice_u / (2.0 * static_cast<double>(positives.size()) *
                    static_cast<double>(negatives.size()));
}

}  // namespace semdup::redundancy
