#include <cmath>
#include <iostream>
#include <optional>

#include "cli.hpp"
#include "semdup/keff.hpp"
#include "semdup/redundancy.hpp"
#include "semdup/rng.hpp"
#include "semdup/serialize.hpp"

namespace semdup::cli {
namespace {

struct SimulateOptions {
  Common common;
  std::size_t replicates = 400;
  std::size_t dim = 64;
  double sigma2 = 1.0;
  std::optional<double> rho;
  std::vector<double> rhos = {0.0, 0.25, 0.5, 1.0};
  std::vector<std::size_t> ks = {1, 16, 256};
  std::vector<std::size_t> ns = {16, 256};
  double keff = 1e4;
  double alpha = 0.5;
  double l_star = 2.0;
  double b = 10.0;
  double hutter_rho = 0.5;
  double zipf_exponent = 2.0;
  std::size_t zipf_count = 100000;
  std::size_t score_positives = 200;
  std::size_t score_negatives = 2000;
};

void run_simulate(const CLI::App& sub, const SimulateOptions& o) {
  set_log_level(o.common.log_level);
  if (o.replicates < 30) throw UsageError("--replicates must be at least 30");
  if (o.rho && !(*o.rho >= 0.0 && *o.rho <= 1.0)) throw UsageError("--rho must lie in [0, 1]");
  const std::vector<double> rhos = o.rho ? std::vector<double>{*o.rho} : o.rhos;
  const double hutter_rho = o.rho ? *o.rho : o.hutter_rho;
  const auto dir = prepare_output(sub, o.common);

  // Variance saturation grid.
  CsvTable variance({"rho", "K", "n", "empirical", "se", "predicted", "pass"});
  std::size_t cells = 0, passed = 0;
  for (double rho : rhos) {
    for (std::size_t k : o.ks) {
      for (std::size_t n : o.ns) {
        redundancy::GradientClusterModel model;
        model.dim = o.dim;
        model.k = k;
        model.sigma2 = o.sigma2;
        model.rho = rho;
        model.seed = derive_seed(o.common.seed, "simulate-variance", cells);
        const auto check = redundancy::verify_variance_saturation(model, n, o.replicates);
        const bool ok = check.within(4.0);
        ++cells;
        passed += ok;
        variance.add(rho).add_int(static_cast<long long>(k)).add_int(static_cast<long long>(n));
        variance.add(check.empirical).add(check.se).add(check.predicted);
        variance.add(std::string(ok ? "pass" : "fail"));
        variance.end_row();
      }
    }
  }
  variance.write(dir / "variance.csv");

  // Degradation curve from the Hutter-style learning curve.
  std::vector<double> grid;
  for (int e = 4; e <= 16; ++e) grid.push_back(std::pow(10.0, 0.5 * e));
  const auto curve =
      redundancy::hutter_degradation_curve(o.keff, hutter_rho, grid, o.alpha, o.l_star, o.b);
  CsvTable hutter({"n", "n_eff", "reuse", "l_inf", "l_finite", "delta", "delta_exact"});
  for (const auto& p : curve) {
    hutter.add(p.n).add(p.n_eff).add(p.reuse).add(p.l_inf).add(p.l_finite).add(p.delta)
        .add(p.delta_exact);
    hutter.end_row();
  }
  hutter.write(dir / "hutter.csv");

  // Unseen mass under Zipf weights.
  const auto mix = keff::LatentMixture::zipf(o.zipf_exponent, o.zipf_count);
  CsvTable unseen({"n", "unseen_mass"});
  for (int e = 0; e <= 12; ++e) {
    const auto n = static_cast<std::uint64_t>(std::llround(std::pow(10.0, 0.5 * e)));
    unseen.add_int(static_cast<long long>(n)).add(redundancy::hutter_excess_risk(mix, n));
    unseen.end_row();
  }
  unseen.write(dir / "unseen_mass.csv");

  // Separability demo: Gaussian negatives against shifted Gaussian positives.
  CsvTable sep({"shift", "auc", "zscore"});
  Rng rng(derive_seed(o.common.seed, "simulate-scores"));
  for (double shift : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    std::vector<double> pos(o.score_positives), neg(o.score_negatives);
    for (double& v : pos) v = shift + rng.normal();
    for (double& v : neg) v = rng.normal();
    sep.add(shift).add(redundancy::auc(pos, neg)).add(redundancy::zscore(pos, neg));
    sep.end_row();
  }
  sep.write(dir / "separability.csv");

  nlohmann::ordered_json summary;
  summary["command"] = "simulate";
  summary["cells"] = cells;
  summary["cells_passed"] = passed;
  summary["replicates"] = o.replicates;
  summary["summary"] = passed == cells ? "pass" : "fail";
  write_json(dir / "summary.json", summary);
  std::cout << "simulate: " << passed << "/" << cells << " variance cells "
            << (passed == cells ? "pass" : "FAIL") << '\n';
}

}  // namespace

void register_simulate(CLI::App& app, Runner& run) {
  auto o = std::make_shared<SimulateOptions>();
  auto* sub = app.add_subcommand("simulate", "Gradient-redundancy and learning-curve simulations");
  add_common_options(sub, o->common);
  sub->add_option("--replicates", o->replicates, "Monte-Carlo replicates per grid cell (>= 30)")
      ->capture_default_str();
  sub->add_option("--dim", o->dim, "Gradient dimension")->capture_default_str();
  sub->add_option("--sigma2", o->sigma2, "Per-sample gradient energy")->capture_default_str();
  sub->add_option("--rho", o->rho, "Use this single rho for the grid and the degradation curve");
  sub->add_option("--rho-grid", o->rhos, "rho values of the variance grid")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--k-grid", o->ks, "Cluster counts of the variance grid")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--n-grid", o->ns, "Batch sizes of the variance grid")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--keff", o->keff, "Effective pool size for the degradation curve")
      ->capture_default_str();
  sub->add_option("--alpha", o->alpha, "Learning-curve exponent in (0, 1)")->capture_default_str();
  sub->add_option("--l-star", o->l_star, "Irreducible loss")->capture_default_str();
  sub->add_option("--b", o->b, "Learning-curve scale")->capture_default_str();
  sub->add_option("--hutter-rho", o->hutter_rho, "rho of the degradation curve (without --rho)")
      ->capture_default_str();
  sub->add_option("--zipf-exponent", o->zipf_exponent, "Tail exponent of the unseen-mass mixture")
      ->capture_default_str();
  sub->add_option("--zipf-count", o->zipf_count, "Types in the unseen-mass mixture")
      ->capture_default_str();
  sub->callback([&run, sub, o] { run = [sub, o] { run_simulate(*sub, *o); }; });
}

}  // namespace semdup::cli
