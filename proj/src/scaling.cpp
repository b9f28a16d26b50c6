#include "semdup/scaling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "semdup/error.hpp"
#include "semdup/regression.hpp"

namespace semdup::scaling {

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "eval"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "eval") return Split::Eval;
  throw FormatError("unknown split '" + std::string(name) + "' (expected train or eval)");
}

bool RunRecord::is_baseline() const { return std::isinf(pool_size) && pool_size > 0; }

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

double parse_number(std::string_view text, std::size_t line, std::string_view column) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad " + std::string(column) +
                      " value '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool same_compute(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

std::string format_compute(double c) {
  std::ostringstream os;
  os.precision(17);
  os << c;
  return os.str();
}

void rel_error_summary(const std::vector<double>& residuals, double& mean, double& median) {
  mean = median = 0.0;
  if (residuals.empty()) return;
  std::vector<double> e(residuals.size());
  std::transform(residuals.begin(), residuals.end(), e.begin(),
                 [](double r) { return std::abs(r); });
  double s = 0.0;
  for (double v : e) s += v;
  mean = s / static_cast<double>(e.size());
  std::sort(e.begin(), e.end());
  const std::size_t n = e.size();
  median = n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
}

std::size_t distinct_count(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(
      std::unique(v.begin(), v.end(), [](double a, double b) { return same_compute(a, b); }) -
      v.begin());
}

}  // namespace

std::vector<RunRecord> parse_runs(std::string_view text) {
  std::vector<RunRecord> runs;
  std::map<std::string, std::size_t, std::less<>> col;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header_done = false;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = trim(text.substr(start, nl == std::string_view::npos ? nl : nl - start));
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line);
    if (!header_done) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[std::string(fields[i])] = i;
      for (const char* need : {"compute", "pool_size", "loss", "split"}) {
        if (!col.count(need)) {
          throw FormatError(std::string("runs CSV is missing column '") + need + "'");
        }
      }
      header_done = true;
      continue;
    }
    if (fields.size() != col.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(col.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    RunRecord r;
    r.compute = parse_number(fields[col.at("compute")], line_no, "compute");
    r.pool_size = parse_number(fields[col.at("pool_size")], line_no, "pool_size");
    r.loss = parse_number(fields[col.at("loss")], line_no, "loss");
    r.split = parse_split(fields[col.at("split")]);
    if (auto it = col.find("keff_hat"); it != col.end() && !fields[it->second].empty()) {
      r.keff_hat = parse_number(fields[it->second], line_no, "keff_hat");
    }
    if (!(r.compute > 0.0) || !std::isfinite(r.compute)) {
      throw FormatError("line " + std::to_string(line_no) + ": compute must be positive");
    }
    if (!(r.pool_size > 0.0)) {
      throw FormatError("line " + std::to_string(line_no) + ": pool_size must be positive");
    }
    if (!(r.loss > 0.0) || !std::isfinite(r.loss)) {
      throw FormatError("line " + std::to_string(line_no) + ": loss must be positive");
    }
    runs.push_back(r);
  }
  if (!header_done) throw FormatError("runs CSV is empty");
  return runs;
}

std::vector<RunRecord> load_runs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_runs(buf.str());
}

std::vector<DeltaPoint> frac_increase(std::span<const RunRecord> runs,
                                      std::span<const RunRecord> baseline) {
  std::vector<DeltaPoint> out;
  std::string orphans;
  for (const auto& r : runs) {
    if (r.is_baseline()) continue;
    const RunRecord* match = nullptr;
    for (const auto& b : baseline) {
      if (b.split == r.split && same_compute(b.compute, r.compute)) {
        match = &b;
        break;
      }
    }
    if (!match) {
      if (!orphans.empty()) orphans += "; ";
      orphans += "C=" + format_compute(r.compute) + " K=" + format_compute(r.pool_size) + " (" +
                 std::string(to_string(r.split)) + ")";
      continue;
    }
    out.push_back({r.compute, r.pool_size, (r.loss - match->loss) / match->loss, r.loss,
                   match->loss, r.split});
  }
  if (!orphans.empty()) throw MismatchError("no baseline run at matching compute for " + orphans);
  return out;
}

std::vector<DeltaPoint> frac_increase(std::span<const RunRecord> all_runs) {
  std::vector<RunRecord> finite, base;
  for (const auto& r : all_runs) (r.is_baseline() ? base : finite).push_back(r);
  return frac_increase(finite, base);
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw FitError("power-law fit: x and y lengths differ");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw FitError("power-law fit needs positive x and y");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const LineFit line = fit_line(lx, ly);
  return {std::exp(line.intercept), line.slope, line.rss, line.n};
}

double PlaneLawFit::delta(double compute, double pool_size) const {
  if (std::isinf(pool_size)) return 0.0;
  return a * std::pow(compute, beta) * std::pow(pool_size, -gamma);
}

double RatioLawFit::delta(double compute, double pool_size) const {
  if (std::isinf(pool_size)) return 0.0;
  return lambda * std::pow(std::sqrt(compute) / pool_size, eta);
}

namespace {

struct Usable {
  std::vector<const DeltaPoint*> points;
  std::vector<double> weights;
  std::size_t excluded = 0;
};

Usable usable_points(std::span<const DeltaPoint> deltas, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != deltas.size()) {
    throw FitError("weights and points differ in length");
  }
  Usable u;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& p = deltas[i];
    if (!(p.delta > 0.0)) {
      ++u.excluded;
      continue;
    }
    if (!(p.compute > 0.0) || !(p.pool_size > 0.0) || std::isinf(p.pool_size)) {
      throw FitError("points need positive compute and finite positive pool size");
    }
    if (!weights.empty() && !(weights[i] > 0.0)) throw FitError("weights must be positive");
    u.points.push_back(&p);
    u.weights.push_back(weights.empty() ? 1.0 : weights[i]);
  }
  if (u.points.size() < 3) {
    throw FitError("need at least 3 points with positive Delta, have " +
                   std::to_string(u.points.size()));
  }
  std::vector<double> cs, ks;
  for (const auto* p : u.points) {
    cs.push_back(p->compute);
    ks.push_back(p->pool_size);
  }
  if (distinct_count(cs) < 2) throw FitError("rank deficient: compute has no spread");
  if (distinct_count(ks) < 2) throw FitError("rank deficient: pool size has no spread");
  return u;
}

}  // namespace

PlaneLawFit fit_plane_law(std::span<const DeltaPoint> deltas, std::span<const double> weights) {
  const Usable u = usable_points(deltas, weights);
  const auto n = static_cast<Eigen::Index>(u.points.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto* p = u.points[static_cast<std::size_t>(i)];
    const double sw = std::sqrt(u.weights[static_cast<std::size_t>(i)]);
    x(i, 0) = sw;
    x(i, 1) = sw * std::log(p->compute);
    x(i, 2) = sw * std::log(p->pool_size);
    y(i) = sw * std::log(p->delta);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < 3) throw FitError("rank deficient: ln C and ln K are collinear");
  const Eigen::VectorXd coef = qr.solve(y);

  PlaneLawFit fit;
  fit.a = std::exp(coef(0));
  fit.beta = coef(1);
  fit.gamma = -coef(2);
  fit.method = weights.empty() ? "ols" : "wls";
  fit.n_points = u.points.size();
  fit.excluded_nonpositive = u.excluded;
  fit.log_rss = (x * coef - y).squaredNorm();
  for (const auto* p : u.points) {
    fit.residuals.push_back((fit.delta(p->compute, p->pool_size) - p->delta) / p->delta);
  }
  rel_error_summary(fit.residuals, fit.mean_abs_rel_err, fit.median_abs_rel_err);
  return fit;
}

RatioLawFit fit_ratio_law(std::span<const DeltaPoint> deltas, std::span<const double> weights) {
  const Usable u = usable_points(deltas, weights);
  std::vector<double> lx, ly;
  for (const auto* p : u.points) {
    lx.push_back(0.5 * std::log(p->compute) - std::log(p->pool_size));
    ly.push_back(std::log(p->delta));
  }
  const LineFit line = fit_line(lx, ly, weights.empty() ? std::span<const double>{} : u.weights);
  RatioLawFit fit;
  fit.lambda = std::exp(line.intercept);
  fit.eta = line.slope;
  fit.n_points = u.points.size();
  fit.excluded_nonpositive = u.excluded;
  fit.log_rss = line.rss;
  for (const auto* p : u.points) {
    fit.residuals.push_back((fit.delta(p->compute, p->pool_size) - p->delta) / p->delta);
  }
  rel_error_summary(fit.residuals, fit.mean_abs_rel_err, fit.median_abs_rel_err);
  return fit;
}

BaselineCurve::BaselineCurve(std::span<const RunRecord> baselines) {
  for (const auto& b : baselines) {
    if (b.is_baseline()) points_.emplace_back(b.compute, b.loss);
  }
  if (points_.empty()) throw MismatchError("undefined baseline: no baseline runs");
  std::sort(points_.begin(), points_.end());
  std::vector<double> cs, ls;
  for (const auto& [c, l] : points_) {
    cs.push_back(c);
    ls.push_back(l);
  }
  if (distinct_count(cs) >= 2) trend_ = fit_power_law(cs, ls);
}

bool BaselineCurve::is_exact(double compute) const {
  return std::any_of(points_.begin(), points_.end(),
                     [&](const auto& p) { return same_compute(p.first, compute); });
}

double BaselineCurve::operator()(double compute) const {
  for (const auto& [c, l] : points_) {
    if (same_compute(c, compute)) return l;
  }
  if (!trend_) {
    throw MismatchError("undefined baseline at C=" + format_compute(compute) +
                        " (a single baseline run cannot be extrapolated)");
  }
  return trend_->coefficient * std::pow(compute, trend_->exponent);
}

double predict_restored_loss(const PlaneLawFit& fit,
                             const std::function<double(double)>& baseline_loss, double compute,
                             double pool_size) {
  if (!(compute > 0.0)) throw DomainError("compute must be positive");
  if (!(pool_size > 0.0)) throw DomainError("pool size must be positive");
  double l_inf = 0.0;
  try {
    l_inf = baseline_loss(compute);
  } catch (const MismatchError&) {
    throw;
  } catch (const std::exception& e) {
    throw MismatchError("undefined baseline at C=" + format_compute(compute) + ": " + e.what());
  }
  if (!(l_inf > 0.0) || !std::isfinite(l_inf)) {
    throw MismatchError("undefined baseline at C=" + format_compute(compute));
  }
  return l_inf * (1.0 + fit.delta(compute, pool_size));
}

FitErrorReport fit_error_report(std::span<const double> predictions,
                                std::span<const double> actuals) {
  if (predictions.size() != actuals.size()) {
    throw MismatchError("predictions (" + std::to_string(predictions.size()) +
                        ") and actuals (" + std::to_string(actuals.size()) + ") differ in length");
  }
  FitErrorReport r;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (actuals[i] == 0.0) throw DomainError("actual value is zero at index " + std::to_string(i));
    r.abs_rel_err.push_back(std::abs(predictions[i] - actuals[i]) / std::abs(actuals[i]));
  }
  rel_error_summary(r.abs_rel_err, r.mean_abs_rel_err, r.median_abs_rel_err);
  return r;
}

}  // namespace semdup::scaling
