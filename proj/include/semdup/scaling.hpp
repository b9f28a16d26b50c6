#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semdup::scaling {

enum class Split { Train, Eval };

std::string_view to_string(Split s);
Split parse_split(std::string_view name);

struct RunRecord {
  double compute = 0.0;
  double pool_size = 0.0;  // +inf marks a baseline run
  double loss = 0.0;
  Split split = Split::Eval;
  std::optional<double> keff_hat;

  bool is_baseline() const;
};

// CSV with header columns compute,pool_size,loss,split and optionally
// keff_hat (in any order). pool_size and keff_hat accept "inf".
std::vector<RunRecord> load_runs(const std::filesystem::path& path);
std::vector<RunRecord> parse_runs(std::string_view csv_text);

struct DeltaPoint {
  double compute = 0.0;
  double pool_size = 0.0;
  double delta = 0.0;
  double loss = 0.0;
  double baseline_loss = 0.0;
  Split split = Split::Eval;
};

// Delta = (L(K) - L(inf)) / L(inf) for every finite-K run, paired with the
// baseline of the same split whose compute matches within 1e-9 relative.
// Throws MismatchError listing every run without a baseline.
std::vector<DeltaPoint> frac_increase(std::span<const RunRecord> runs,
                                      std::span<const RunRecord> baseline);

// Splits a mixed run list into finite-K runs and baselines, then as above.
std::vector<DeltaPoint> frac_increase(std::span<const RunRecord> all_runs);

struct PowerLawFit {
  double coefficient = 0.0;
  double exponent = 0.0;
  double log_rss = 0.0;
  std::size_t n_points = 0;
};

// Least squares of ln y on ln x; returns (exp(intercept), slope).
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct PlaneLawFit {
  double a = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::vector<double> residuals;  // (fitted - Delta) / Delta per fitted point
  std::string method = "ols";
  std::size_t n_points = 0;
  std::size_t excluded_nonpositive = 0;
  double log_rss = 0.0;
  double mean_abs_rel_err = 0.0;
  double median_abs_rel_err = 0.0;

  double delta(double compute, double pool_size) const;
};

// ln Delta ~ ln a + beta ln C - gamma ln K over points with Delta > 0. Optional
// weights (e.g. inverse squared relative SE) give weighted least squares.
// Throws FitError if fewer than 3 usable points or C or K has no spread.
PlaneLawFit fit_plane_law(std::span<const DeltaPoint> deltas,
                          std::span<const double> weights = {});

struct RatioLawFit {
  double lambda = 0.0;
  double eta = 0.0;  // Delta = lambda (sqrt(C)/K)^eta, i.e. gamma = eta, beta = eta/2
  std::vector<double> residuals;
  std::size_t n_points = 0;
  std::size_t excluded_nonpositive = 0;
  double log_rss = 0.0;
  double mean_abs_rel_err = 0.0;
  double median_abs_rel_err = 0.0;

  double delta(double compute, double pool_size) const;
};

RatioLawFit fit_ratio_law(std::span<const DeltaPoint> deltas,
                          std::span<const double> weights = {});

// L_inf(C) from baseline runs: the exact run when compute matches within
// 1e-9 relative, otherwise a power law in C fitted to all baselines.
class BaselineCurve {
 public:
  explicit BaselineCurve(std::span<const RunRecord> baselines);

  double operator()(double compute) const;
  bool is_exact(double compute) const;
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<std::pair<double, double>> points_;  // (compute, loss) sorted
  std::optional<PowerLawFit> trend_;
};

// L_pred = L_inf(C) (1 + a C^beta K^-gamma); K = +inf gives L_inf(C).
// Throws MismatchError ("undefined baseline") when L_inf(C) is not a positive
// finite number or the baseline callback throws.
double predict_restored_loss(const PlaneLawFit& fit,
                             const std::function<double(double)>& baseline_loss, double compute,
                             double pool_size);

struct FitErrorReport {
  double mean_abs_rel_err = 0.0;
  double median_abs_rel_err = 0.0;
  std::vector<double> abs_rel_err;
};

FitErrorReport fit_error_report(std::span<const double> predictions,
                                std::span<const double> actuals);

}  // namespace semdup::scaling
