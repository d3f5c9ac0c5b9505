#include "glmclust/distributions.hpp"

#include <cmath>
#include <limits>

namespace glmclust {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxTerms = 100000;

// log(1 - exp(v)) for v <= 0.
double log1m_exp(double v) {
  if (v >= 0) return -std::numeric_limits<double>::infinity();
  return v > -M_LN2 ? std::log(-std::expm1(v)) : std::log1p(-std::exp(v));
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
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
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// x and y = 1 - x are both supplied along with their logs.
double log_beta_inc_impl(double x, double log_x, double y, double log_y, double a, double b) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  if (!(y > 0)) return 0.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double front = a * log_x + b * log_y - log_beta_fn(a, b);
    return front + std::log(beta_continued_fraction(x, a, b)) - std::log(a);
  }
  const double front = b * log_y + a * log_x - log_beta_fn(b, a);
  const double log_complement = front + std::log(beta_continued_fraction(y, b, a)) - std::log(b);
  return log1m_exp(log_complement);
}

}  // namespace

double log_gamma_q(double a, double x) {
  if (!(x > 0)) return 0.0;
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  const double front = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxTerms; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    return log1m_exp(front + std::log(sum));
  }
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return front + std::log(h);
}

double log_beta_inc(double x, double one_minus_x, double a, double b) {
  return log_beta_inc_impl(x, std::log(x), one_minus_x, std::log(one_minus_x), a, b);
}

double tail_log_p(double statistic, const TestDistribution& dist) {
  if (!(statistic > 0)) return 0.0;
  if (const auto* chi = std::get_if<ChiSquare>(&dist)) return log_gamma_q(0.5 * chi->df, 0.5 * statistic);

  const auto& f = std::get<FisherF>(dist);
  if (std::isinf(statistic)) return -std::numeric_limits<double>::infinity();
  // P(F > f) = I_x(df2/2, df1/2) with x = df2 / (df2 + df1 f).
  const double scaled = f.df1 * statistic;
  double x, y, log_x, log_y;
  if (std::isfinite(f.df2 + scaled)) {
    const double denom = f.df2 + scaled;
    x = f.df2 / denom;
    y = scaled / denom;
    log_x = std::log(f.df2) - std::log(denom);
    log_y = std::log(scaled) - std::log(denom);
  } else {
    log_x = std::log(f.df2) - std::log(f.df1) - std::log(statistic);
    x = std::exp(log_x);
    y = 1.0;
    log_y = 0.0;
  }
  return log_beta_inc_impl(x, log_x, y, log_y, 0.5 * f.df2, 0.5 * f.df1);
}

}  // namespace glmclust
