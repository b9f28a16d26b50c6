#include <iostream>

#include "cli.hpp"
#include "semdup/nullmodel.hpp"
#include "semdup/rng.hpp"
#include "semdup/synthetic.hpp"

namespace semdup::cli {
namespace {

struct GenOptions {
  Common common;
  std::string kind = "uniform";
  int d = 0;
  std::size_t count = 0;
  double kappa = 0.0;
  std::size_t unique = 1000;
  std::size_t n_star = 2048;
  double jitter = 1e-3;
  std::uint64_t ladder_seed = 0;
  std::string format = "binary";
  std::string out;
};

void run_gen(const CLI::App& sub, const GenOptions& o) {
  set_log_level(o.common.log_level);
  if (o.d < 1) throw UsageError("--d must be at least 1");
  if (o.count < 1) throw UsageError("--count must be at least 1");
  const auto dir = prepare_output(sub, o.common);
  const std::uint64_t seed = derive_seed(o.common.seed, "gen");

  EmbeddingSet set;
  if (o.kind == "uniform") {
    set = nullmodel::sample_uniform_sphere(nullmodel::NullModelSpec::uniform(o.d, seed), o.count);
  } else if (o.kind == "vmf") {
    set = nullmodel::sample_vmf(nullmodel::NullModelSpec::vmf(o.d, o.kappa, seed), o.count);
  } else if (o.kind == "stream") {
    set = synthetic::duplicate_stream(o.d, o.unique, o.count, seed);
  } else {
    synthetic::TwoRegimeSpec spec;
    spec.d = o.d;
    spec.count = o.count;
    spec.n_star = o.n_star;
    spec.jitter_angle = o.jitter;
    spec.ladder_seed = o.ladder_seed;
    spec.seed = seed;
    set = synthetic::two_regime_set(spec);
  }
  const auto format = o.format == "csv" ? EmbeddingFormat::Csv : EmbeddingFormat::Binary;
  const std::filesystem::path path =
      o.out.empty() ? dir / (format == EmbeddingFormat::Csv ? "embeddings.csv" : "embeddings.semd")
                    : std::filesystem::path(o.out);
  save_embeddings(path, set, format);
  std::cout << "gen: wrote " << set.count() << " x " << set.dim() << " to " << path.string()
            << '\n';
}

}  // namespace

void register_gen(CLI::App& app, Runner& run) {
  auto o = std::make_shared<GenOptions>();
  auto* sub = app.add_subcommand("gen", "Write synthetic embedding files");
  add_common_options(sub, o->common);
  sub->add_option("--kind", o->kind, "uniform, vmf, stream or two-regime")
      ->check(CLI::IsMember({"uniform", "vmf", "stream", "two-regime"}))
      ->capture_default_str();
  sub->add_option("--d", o->d, "Sphere dimension (rows have d+1 coordinates)")->required();
  sub->add_option("--count", o->count, "Rows to write")->required();
  sub->add_option("--kappa", o->kappa, "vMF concentration")->capture_default_str();
  sub->add_option("--unique", o->unique, "Distinct vectors behind a stream")->capture_default_str();
  sub->add_option("--n-star", o->n_star, "Two-regime: duplicates appear above this pool size")
      ->capture_default_str();
  sub->add_option("--jitter", o->jitter, "Two-regime: copy angle in radians")
      ->capture_default_str();
  sub->add_option("--ladder-seed", o->ladder_seed, "Two-regime: seed the ladder will use")
      ->capture_default_str();
  sub->add_option("--format", o->format, "binary or csv")
      ->check(CLI::IsMember({"binary", "csv"}))
      ->capture_default_str();
  sub->add_option("--out", o->out, "Output file (default: in the output directory)");
  sub->callback([&run, sub, o] { run = [sub, o] { run_gen(*sub, *o); }; });
}

}  // namespace semdup::cli
