#pragma once

#include <variant>

namespace glmclust {

struct ChiSquare {
  double df;
};

struct FisherF {
  double df1;
  double df2;
};

using TestDistribution = std::variant<ChiSquare, FisherF>;

/// Natural log of the regularised upper incomplete gamma Q(a, x).
double log_gamma_q(double a, double x);

/// Natural log of the regularised incomplete beta I_x(a, b). `one_minus_x`
/// is taken separately so that x close to 1 keeps its precision.
double log_beta_inc(double x, double one_minus_x, double a, double b);

/// log P(T > statistic) for T following `dist`, evaluated in log space so
/// that tails far below the smallest double stay ordered.
double tail_log_p(double statistic, const TestDistribution& dist);

}  // namespace glmclust
