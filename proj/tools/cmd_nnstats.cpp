#include <cmath>
#include <iostream>

#include "cli.hpp"
#include "semdup/nnstats.hpp"
#include "semdup/serialize.hpp"

namespace semdup::cli {
namespace {

struct NNStatsOptions {
  Common common;
  std::string input;
  std::string format = "auto";
  std::vector<std::size_t> sizes;
  std::size_t queries_cap = 100000;
  std::size_t exact_cutoff = 200000;
  LshFlags lsh;
  std::size_t fit_first = 0;
  std::size_t fit_last = 3;
  double deviation_factor = 1.5;
  std::size_t matryoshka = 0;
  std::vector<double> thresholds = nnstats::default_thresholds();
};

void run_nnstats(const CLI::App& sub, const NNStatsOptions& o) {
  set_log_level(o.common.log_level);
  const unsigned threads = resolve_threads(o.common.threads);
  if (!(o.deviation_factor > 1.0)) throw UsageError("--deviation-factor must exceed 1");
  if (o.fit_last < o.fit_first + 3) throw UsageError("the fit window needs at least 3 rungs");

  const auto raw = load_embeddings(o.input, resolve_format(o.format, o.input));
  log(LogLevel::Info, "loaded " + std::to_string(raw.count()) + " x " + std::to_string(raw.dim()));
  const EmbeddingSet set = o.matryoshka ? matryoshka_slice(raw, o.matryoshka) : normalize(raw);

  std::vector<std::size_t> sizes = o.sizes;
  if (sizes.empty()) {
    for (std::size_t n = 1024; n <= set.count(); n *= 2) sizes.push_back(n);
    if (sizes.empty()) sizes.push_back(set.count());
  }
  for (std::size_t n : sizes) {
    if (n > set.count()) {
      throw UsageError("ladder size " + std::to_string(n) + " exceeds the " +
                       std::to_string(set.count()) + " rows in " + o.input);
    }
  }
  const auto dir = prepare_output(sub, o.common);

  nnstats::LadderOptions lo;
  lo.queries_cap = o.queries_cap;
  lo.exact_cutoff = o.exact_cutoff;
  lo.lsh = to_params(o.lsh);
  lo.search.threads = threads;
  lo.search.thresholds = o.thresholds;
  lo.fit_window = {o.fit_first, o.fit_last};
  lo.deviation_factor = o.deviation_factor;
  lo.seed = o.common.seed;
  const auto ladder = nnstats::run_subsample_ladder(set, sizes, lo);
  for (const auto& f : ladder.failures) {
    log(LogLevel::Warn, "rung N=" + std::to_string(f.n) + " failed: " + f.message);
  }

  auto j = to_json(ladder);
  j["dim"] = set.dim();
  j["source_dim"] = raw.dim();
  j["matryoshka"] = o.matryoshka;
  write_json(dir / "ladder.json", j);
  write_text(dir / "ladder.csv", ladder_csv(ladder));

  nlohmann::ordered_json br;
  br["deviation_factor"] = o.deviation_factor;
  br["window_first"] = ladder.fit_window.first;
  br["window_last"] = ladder.fit_window.last;
  if (ladder.powerlaw_fit) {
    const auto result = nnstats::detect_breakdown(ladder, ladder.fit_window, o.deviation_factor);
    br["slope"] = json_number(result.fit.slope);
    br["intercept"] = json_number(result.fit.intercept);
    br["breakdown_n"] = result.breakdown_n ? nlohmann::ordered_json(*result.breakdown_n)
                                           : nlohmann::ordered_json(nullptr);
    auto& rungs = br["rungs"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < ladder.entries.size(); ++k) {
      const double obs = ladder.entries[k].report.mean_gap;
      const double pred = result.predicted_gap[k];
      rungs.push_back({{"n", ladder.entries[k].n},
                       {"observed_gap", json_number(obs)},
                       {"predicted_gap", json_number(pred)},
                       {"ratio", json_number(obs / pred)}});
    }
    std::cout << "nnstats: slope " << format_double(result.fit.slope) << ", breakdown "
              << (result.breakdown_n ? std::to_string(*result.breakdown_n) : "none") << '\n';
  } else {
    br["slope"] = nullptr;
    br["intercept"] = nullptr;
    br["breakdown_n"] = nullptr;
    br["reason"] = "fewer than 3 successful rungs in the fit window";
    std::cout << "nnstats: no power-law fit (fewer than 3 rungs in window)\n";
  }
  write_json(dir / "breakdown.json", br);
}

}  // namespace

void register_nnstats(CLI::App& app, Runner& run) {
  auto o = std::make_shared<NNStatsOptions>();
  auto* sub = app.add_subcommand("nnstats", "Subsample ladder of nearest-neighbour statistics");
  add_common_options(sub, o->common);
  sub->add_option("--input", o->input, "Embedding file")->required();
  sub->add_option("--format", o->format, "auto, binary or csv")
      ->check(CLI::IsMember({"auto", "binary", "csv"}))
      ->capture_default_str();
  sub->add_option("--sizes", o->sizes, "Ladder pool sizes (default: powers of two from 1024)")
      ->delimiter(',');
  sub->add_option("--queries-cap", o->queries_cap, "Queries per rung")->capture_default_str();
  sub->add_option("--exact-cutoff", o->exact_cutoff, "Largest rung searched exhaustively")
      ->capture_default_str();
  add_lsh_options(sub, o->lsh);
  sub->add_option("--fit-first", o->fit_first, "First rung of the power-law window")
      ->capture_default_str();
  sub->add_option("--fit-last", o->fit_last, "One past the last rung of the window")
      ->capture_default_str();
  sub->add_option("--deviation-factor", o->deviation_factor, "Breakdown when gap < fit / factor")
      ->capture_default_str();
  sub->add_option("--matryoshka", o->matryoshka, "Slice to this many leading dims (0: off)")
      ->capture_default_str();
  sub->add_option("--thresholds", o->thresholds, "Tail thresholds T for P(M >= T)")
      ->delimiter(',')
      ->capture_default_str();
  sub->callback([&run, sub, o] { run = [sub, o] { run_nnstats(*sub, *o); }; });
}

}  // namespace semdup::cli
