#include "semdup/synthetic.hpp"

#include <cmath>

#include "semdup/error.hpp"
#include "semdup/nnstats.hpp"
#include "semdup/nullmodel.hpp"
#include "semdup/rng.hpp"

namespace semdup::synthetic {

EmbeddingSet duplicate_stream(int d, std::size_t unique, std::size_t n, std::uint64_t seed) {
  if (unique == 0 || n == 0) throw DomainError("duplicate stream needs unique >= 1 and n >= 1");
  const auto pool =
      nullmodel::sample_uniform_sphere(nullmodel::NullModelSpec::uniform(d, derive_seed(seed, "pool")), unique);
  Rng rng(derive_seed(seed, "draws"));
  std::vector<std::uint32_t> idx(n);
  for (auto& i : idx) i = static_cast<std::uint32_t>(rng.below(unique));
  return pool.gather(idx);
}

EmbeddingSet two_regime_set(const TwoRegimeSpec& spec) {
  if (spec.n_star < 2 || spec.n_star >= spec.count) {
    throw DomainError("two-regime set needs 2 <= n_star < count");
  }
  if (!(spec.jitter_angle >= 0.0)) throw DomainError("jitter angle must be non-negative");
  EmbeddingSet set = nullmodel::sample_uniform_sphere(
      nullmodel::NullModelSpec::uniform(spec.d, derive_seed(spec.seed, "background")), spec.count);
  const auto order = nnstats::ladder_subsample_order(spec.count, spec.count, spec.ladder_seed);
  const std::size_t dim = set.dim();
  Rng rng(derive_seed(spec.seed, "copies"));
  std::vector<double> v(dim), t(dim);
  const double c = std::cos(spec.jitter_angle);
  const double s = std::sin(spec.jitter_angle);
  for (std::size_t k = spec.n_star; k < spec.count; ++k) {
    const auto src = set.row(order[rng.below(spec.n_star)]);
    // Rotate the source by jitter_angle toward a random orthogonal direction.
    double proj = 0.0;
    for (std::size_t c2 = 0; c2 < dim; ++c2) {
      t[c2] = rng.normal();
      proj += t[c2] * src[c2];
    }
    double tn = 0.0;
    for (std::size_t c2 = 0; c2 < dim; ++c2) {
      t[c2] -= proj * src[c2];
      tn += t[c2] * t[c2];
    }
    tn = std::sqrt(tn);
    double norm = 0.0;
    for (std::size_t c2 = 0; c2 < dim; ++c2) {
      v[c2] = c * src[c2] + s * t[c2] / tn;
      norm += v[c2] * v[c2];
    }
    norm = std::sqrt(norm);
    auto dst = set.row(order[k]);
    for (std::size_t c2 = 0; c2 < dim; ++c2) dst[c2] = static_cast<float>(v[c2] / norm);
  }
  return set;
}

}  // namespace semdup::synthetic
