#include <algorithm>
#include <iostream>

#include "cli.hpp"
#include "semdup/keff.hpp"
#include "semdup/serialize.hpp"

namespace semdup::cli {
namespace {

struct KeffOptions {
  Common common;
  std::string stream;
  std::string reference;
  std::string format = "auto";
  double m_plus = 1.0;
  std::size_t n_meas = 0;
  std::size_t queries_cap = 100000;
  std::size_t exact_cutoff = 200000;
  LshFlags lsh;
};

void run_keff(const CLI::App& sub, const KeffOptions& o) {
  set_log_level(o.common.log_level);
  if (!(o.m_plus > -1.0 && o.m_plus <= 1.0)) throw UsageError("--m-plus must lie in (-1, 1]");
  const auto stream = normalize(load_embeddings(o.stream, resolve_format(o.format, o.stream)));
  const auto reference =
      normalize(load_embeddings(o.reference, resolve_format(o.format, o.reference)));
  std::size_t n_meas = o.n_meas;
  if (n_meas == 0) n_meas = std::min<std::size_t>({stream.count(), reference.count(), 100000});
  if (n_meas > stream.count() || n_meas > reference.count()) {
    throw UsageError("--n-meas " + std::to_string(n_meas) + " exceeds the stream (" +
                     std::to_string(stream.count()) + ") or reference (" +
                     std::to_string(reference.count()) + ") size");
  }
  const auto dir = prepare_output(sub, o.common);

  keff::PipelineOptions po;
  po.queries_cap = o.queries_cap;
  po.exact_cutoff = o.exact_cutoff;
  po.lsh = to_params(o.lsh);
  po.threads = resolve_threads(o.common.threads);
  const auto est =
      keff::estimate_keff_pipeline(stream, reference, o.m_plus, n_meas, o.common.seed, po);
  write_json(dir / "keff.json", to_json(est));
  std::cout << "keff: q_hat " << format_double(est.q_hat) << ", k_eff_hat "
            << format_double(est.k_eff_hat) << '\n';
}

}  // namespace

void register_keff(CLI::App& app, Runner& run) {
  auto o = std::make_shared<KeffOptions>();
  auto* sub = app.add_subcommand("keff", "Effective pool size from mean NN cosine");
  add_common_options(sub, o->common);
  sub->add_option("--stream", o->stream, "Stream embedding file")->required();
  sub->add_option("--reference", o->reference, "High-uniqueness reference file")->required();
  sub->add_option("--format", o->format, "auto, binary or csv")
      ->check(CLI::IsMember({"auto", "binary", "csv"}))
      ->capture_default_str();
  sub->add_option("--m-plus", o->m_plus, "Mean NN cosine of a colliding pair")
      ->capture_default_str();
  sub->add_option("--n-meas", o->n_meas, "Measurement pool size (0: min(counts, 1e5))")
      ->capture_default_str();
  sub->add_option("--queries-cap", o->queries_cap, "Queries per measurement")
      ->capture_default_str();
  sub->add_option("--exact-cutoff", o->exact_cutoff, "Largest pool searched exhaustively")
      ->capture_default_str();
  add_lsh_options(sub, o->lsh);
  sub->callback([&run, sub, o] { run = [sub, o] { run_keff(*sub, *o); }; });
}

}  // namespace semdup::cli
