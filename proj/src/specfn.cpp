#include "semdup/specfn.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "semdup/error.hpp"

namespace semdup::specfn {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

void require_finite(double v, const char* fn, const char* what) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(fn) + ": " + what + " must be finite");
  }
}

// Continued fraction for I_x(a,b) (modified Lentz). Converges quickly for
// x < (a+1)/(a+b+2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 100000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 2.0 * kEps) return h;
  }
  throw ConvergenceError("reg_inc_beta: continued fraction did not converge");
}

// Coefficients of the Debye polynomials u_k(t), generated once from
//   u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) int_0^t (1 - 5 s^2) u_k(s) ds.
// Stored as reduced polynomials in t^2: u_k(t) = t^k * sum_j c[k][j] t^{2j}.
constexpr int kDebyeTerms = 14;

struct DebyeTable {
  std::array<std::vector<double>, kDebyeTerms> reduced;

  DebyeTable() {
    std::vector<double> u{1.0};  // full coefficients in powers of t
    for (int k = 0; k < kDebyeTerms; ++k) {
      std::vector<double> r;
      for (std::size_t p = static_cast<std::size_t>(k); p < u.size(); p += 2) {
        r.push_back(u[p]);
      }
      reduced[k] = std::move(r);

      std::vector<double> next(u.size() + 3, 0.0);
      for (std::size_t p = 1; p < u.size(); ++p) {
        const double dp = static_cast<double>(p) * u[p];  // coefficient of t^{p-1} in u'
        next[p + 1] += 0.5 * dp;
        next[p + 3] -= 0.5 * dp;
      }
      for (std::size_t p = 0; p < u.size(); ++p) {
        next[p + 1] += u[p] / (8.0 * static_cast<double>(p + 1));
        next[p + 3] -= 5.0 * u[p] / (8.0 * static_cast<double>(p + 3));
      }
      u = std::move(next);
    }
  }

  double eval(int k, double t2) const {
    const auto& c = reduced[k];
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t2 + *it;
    return acc;
  }
};

const DebyeTable& debye_table() {
  static const DebyeTable table;
  return table;
}

// ln of S(nu, kappa) = sum_k (kappa^2/4)^k Γ(nu+1) / (k! Γ(nu+k+1)),
// so that I_nu(kappa) = (kappa/2)^nu / Γ(nu+1) * S. All terms are positive.
double log_bessel_series_sum(double nu, double kappa) {
  constexpr double kRescale = 1e200;
  const double q = 0.25 * kappa * kappa;
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  const double peak = 0.5 * kappa + 1.0;
  for (int k = 1; k < 1000000; ++k) {
    term *= q / (static_cast<double>(k) * (nu + k));
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_scale += std::log(kRescale);
    }
    if (k > peak && term < kEps * 0.25 * sum) {
      return std::log(sum) + log_scale;
    }
  }
  throw ConvergenceError("log_bessel_i: ascending series did not converge");
}

// Series region: kappa < nu + 10 (where the ascending series needs few terms
// relative to the order) or kappa < 40 (where the asymptotic expansion is not
// yet accurate to ~1e-12 for small orders).
bool use_series(double nu, double kappa) {
  return kappa < nu + 10.0 || kappa < 40.0;
}

double log_bessel_debye(double nu, double kappa) {
  const double p = std::hypot(nu, kappa);
  const double t = nu / p;
  const double t2 = t * t;
  const auto& table = debye_table();
  double sum = 1.0;
  double pk = 1.0;
  // p >= 40 in this region, where the first kDebyeTerms terms still decrease.
  for (int k = 1; k < kDebyeTerms; ++k) {
    pk /= p;
    const double term = table.eval(k, t2) * pk;
    sum += term;
  }
  const double eta_term = nu > 0.0 ? nu * std::log(kappa / (nu + p)) : 0.0;
  return p + eta_term - 0.5 * std::log(2.0 * M_PI * p) + std::log(sum);
}

}  // namespace

double ln_gamma(double x) {
  if (std::isnan(x) || x <= 0.0) {
    throw DomainError("ln_gamma: argument must be positive, got " + std::to_string(x));
  }
  // lgamma_r avoids the global signgam write of std::lgamma.
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double ln_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("beta_fn: arguments must be positive");
  }
  return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
}

double beta_fn(double a, double b) { return std::exp(ln_beta(a, b)); }

double reg_inc_beta(double x, double a, double b) {
  return reg_inc_beta(x, 1.0 - x, a, b);
}

double reg_inc_beta(double x, double one_minus_x, double a, double b) {
  if (std::isnan(x) || x < 0.0 || x > 1.0) {
    throw DomainError("reg_inc_beta: x must lie in [0, 1]");
  }
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("reg_inc_beta: a and b must be positive");
  }
  require_finite(a, "reg_inc_beta", "a");
  require_finite(b, "reg_inc_beta", "b");
  if (x == 0.0) return 0.0;
  if (x == 1.0 || one_minus_x <= 0.0) return 1.0;

  const double log_front =
      a * std::log(x) + b * std::log(one_minus_x) - ln_beta(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - front * beta_continued_fraction(one_minus_x, b, a) / b;
}

double log_bessel_i(double nu, double kappa) {
  if (std::isnan(nu) || nu < 0.0) throw DomainError("log_bessel_i: order must be >= 0");
  if (std::isnan(kappa) || kappa < 0.0) throw DomainError("log_bessel_i: argument must be >= 0");
  require_finite(nu, "log_bessel_i", "order");
  require_finite(kappa, "log_bessel_i", "argument");
  if (kappa == 0.0) {
    return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  if (use_series(nu, kappa)) {
    return nu * std::log(0.5 * kappa) - ln_gamma(nu + 1.0) +
           log_bessel_series_sum(nu, kappa);
  }
  return log_bessel_debye(nu, kappa);
}

double log_vmf_normalizer(int d, double kappa) {
  if (d < 1) throw DomainError("vmf_normalizer: d must be >= 1");
  if (std::isnan(kappa) || kappa < 0.0) throw DomainError("vmf_normalizer: kappa must be >= 0");
  require_finite(kappa, "vmf_normalizer", "kappa");
  if (kappa == 0.0) return 0.0;
  const double nu = 0.5 * (d - 1);
  if (use_series(nu, kappa)) {
    // The prefactor 2^nu Γ(nu+1) kappa^{-nu} cancels the series prefactor exactly.
    return log_bessel_series_sum(nu, kappa);
  }
  return nu * std::log(2.0) + ln_gamma(nu + 1.0) - nu * std::log(kappa) +
         log_bessel_debye(nu, kappa);
}

double vmf_normalizer(int d, double kappa) { return std::exp(log_vmf_normalizer(d, kappa)); }

double bessel_ratio(double nu, double kappa) {
  if (kappa == 0.0) {
    if (nu < 0.0) throw DomainError("bessel_ratio: order must be >= 0");
    return 0.0;
  }
  return std::exp(log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa));
}

}  // namespace semdup::specfn
