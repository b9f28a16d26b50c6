#include <charconv>
#include <cmath>
#include <iostream>
#include <optional>

#include "cli.hpp"
#include "semdup/scaling.hpp"
#include "semdup/serialize.hpp"

namespace semdup::cli {
namespace {

struct FitOptions {
  Common common;
  std::string runs;
  std::vector<std::string> predict;
};

struct PredictPoint {
  double compute = 0.0;
  double pool_size = 0.0;
  std::optional<scaling::Split> split;
};

double parse_value(std::string_view text, const std::string& spec) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("bad number in --predict '" + spec + "'");
  }
  return v;
}

// "C=1e18,K=1e5[,split=eval]"
PredictPoint parse_predict(const std::string& spec) {
  PredictPoint p;
  bool have_c = false, have_k = false;
  std::string_view rest = spec;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw UsageError("--predict expects key=value, got '" + spec + "'");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "C") {
      p.compute = parse_value(value, spec);
      have_c = true;
    } else if (key == "K") {
      p.pool_size = parse_value(value, spec);
      have_k = true;
    } else if (key == "split") {
      try {
        p.split = scaling::parse_split(value);
      } catch (const std::exception&) {
        throw UsageError("bad split in --predict '" + spec + "'");
      }
    } else {
      throw UsageError("unknown key in --predict '" + spec + "'");
    }
  }
  if (!have_c || !have_k) throw UsageError("--predict needs both C and K: '" + spec + "'");
  if (!(p.compute > 0.0) || !(p.pool_size > 0.0)) {
    throw UsageError("--predict needs positive C and K: '" + spec + "'");
  }
  return p;
}

void run_fit(const CLI::App& sub, const FitOptions& o) {
  set_log_level(o.common.log_level);
  std::vector<PredictPoint> points;
  for (const auto& s : o.predict) points.push_back(parse_predict(s));
  const auto runs = scaling::load_runs(o.runs);
  const auto dir = prepare_output(sub, o.common);

  nlohmann::ordered_json out;
  out["runs"] = runs.size();
  auto& splits = out["splits"] = nlohmann::ordered_json::object();
  CsvTable predictions({"split", "compute", "pool_size", "l_inf", "l_pred", "baseline"});

  for (const auto split : {scaling::Split::Train, scaling::Split::Eval}) {
    std::vector<scaling::RunRecord> mine;
    bool has_finite = false;
    for (const auto& r : runs) {
      if (r.split != split) continue;
      mine.push_back(r);
      has_finite |= !r.is_baseline();
    }
    if (!has_finite) continue;
    const std::string name(scaling::to_string(split));
    const auto deltas = scaling::frac_increase(mine);
    const auto plane = scaling::fit_plane_law(deltas);
    const auto ratio = scaling::fit_ratio_law(deltas);
    const scaling::BaselineCurve baseline(mine);

    std::vector<double> pred, actual;
    for (const auto& r : mine) {
      if (r.is_baseline()) continue;
      pred.push_back(scaling::predict_restored_loss(plane, std::cref(baseline), r.compute,
                                                    r.pool_size));
      actual.push_back(r.loss);
    }
    const auto err = scaling::fit_error_report(pred, actual);

    nlohmann::ordered_json s;
    s["plane_law"] = to_json(plane);
    s["ratio_law"] = to_json(ratio);
    s["restored_loss"] = {{"mean_abs_rel_err", json_number(err.mean_abs_rel_err)},
                          {"median_abs_rel_err", json_number(err.median_abs_rel_err)},
                          {"n_points", pred.size()}};
    splits[name] = s;
    std::cout << "fit[" << name << "]: a " << format_double(plane.a) << ", beta "
              << format_double(plane.beta) << ", gamma " << format_double(plane.gamma) << '\n';

    for (const auto& p : points) {
      if (p.split && *p.split != split) continue;
      const double l_inf = baseline(p.compute);
      predictions.add(name)
          .add(p.compute)
          .add(p.pool_size)
          .add(l_inf)
          .add(scaling::predict_restored_loss(plane, std::cref(baseline), p.compute, p.pool_size))
          .add(std::string(baseline.is_exact(p.compute) ? "exact" : "extrapolated"));
      predictions.end_row();
    }
  }
  if (splits.empty()) throw UsageError("runs file has no finite-pool runs to fit");
  write_json(dir / "fit.json", out);
  predictions.write(dir / "predictions.csv");
}

}  // namespace

void register_fit(CLI::App& app, Runner& run) {
  auto o = std::make_shared<FitOptions>();
  auto* sub = app.add_subcommand("fit", "Plane-law and ratio-law fits of duplicate-aware scaling");
  add_common_options(sub, o->common);
  sub->add_option("--runs", o->runs, "Runs CSV (compute,pool_size,loss,split[,keff_hat])")
      ->required();
  sub->add_option("--predict", o->predict, "Restored-loss query C=...,K=...[,split=...]")
      ->take_all();
  sub->callback([&run, sub, o] { run = [sub, o] { run_fit(*sub, *o); }; });
}

}  // namespace semdup::cli
