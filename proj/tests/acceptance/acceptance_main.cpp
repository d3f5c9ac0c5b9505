// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "glmclust/cluster_engine.hpp"
#include "glmclust/glm.hpp"
#include "glmclust/growth.hpp"
#include "glmclust/metrics.hpp"
#include "glmclust/model_tests.hpp"
#include "glmclust/simulation.hpp"

using namespace glmclust;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what + (cond ? "" : " [failed]");
    ok = ok && cond;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void report(int id, const std::string& name, const std::function<Check()>& body) {
  const auto start = Clock::now();
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%s %2d %s: %s (%.1f s)\n", c.ok ? "PASS" : "FAIL", id, name.c_str(), c.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !c.ok;
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    d = std::max({d, (static_cast<double>(i) + 1) / n - p[i], p[i] - static_cast<double>(i) / n});
  return d;
}

ModelObject make_object(const FamilySpec& family, Rng& rng, int n, double b0, double b1, double b2, double sigma) {
  std::normal_distribution<double> z(0.0, 1.0);
  ModelObject o;
  o.y.resize(n);
  o.x1 = Eigen::MatrixXd::Ones(n, 1);
  o.x2.resize(n, 2);
  for (int j = 0; j < n; ++j) {
    o.x2(j, 0) = z(rng);
    o.x2(j, 1) = z(rng);
    const double eta = b0 + b1 * o.x2(j, 0) + b2 * o.x2(j, 1);
    o.y(j) = family.log_link() ? static_cast<double>(std::poisson_distribution<long>(std::exp(eta))(rng))
                               : eta + sigma * z(rng);
  }
  return o;
}

SimReport study(const FamilySpec& family, int k_true) {
  SimConfig cfg;
  cfg.family = family;
  cfg.k_true = k_true;
  cfg.c = 10;
  cfg.n0 = 50;
  cfg.sigma = 0.5;
  cfg.replications = 200;
  cfg.rng_seed = 20240601;
  return run_study(cfg);
}

const CriterionSummary& summary(const SimReport& r, const std::string& name) {
  for (const auto& s : r.by_criterion)
    if (s.criterion == name) return s;
  throw std::runtime_error("no summary for " + name);
}

Check glm_correctness() {
  Check c;
  const auto t0 = Clock::now();
  Rng rng = make_rng(1, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd x(20, 3);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 3; ++j) x(i, j) = z(rng);
      y(i) = z(rng);
    }
    const Eigen::VectorXd oracle = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    worst = std::max(worst, (fit_glm(y, x, FamilySpec::gaussian()).coefficients - oracle).cwiseAbs().maxCoeff());
  }
  c.require(worst < 1e-8, "Gaussian vs normal equations max |diff| " + fmt("%.2e", worst) + " < 1e-8");

  double worst_p = 0;
  std::poisson_distribution<int> pois(4.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd y(3 + rep % 20);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = pois(rng);
    if (y.sum() == 0) y(0) = 1;
    const auto fit = fit_glm(y, Eigen::MatrixXd::Ones(y.size(), 1), FamilySpec::poisson());
    worst_p = std::max(worst_p, std::abs(fit.coefficients(0) - std::log(y.mean())));
  }
  Eigen::Vector3d y123(1, 2, 3);
  const double b = fit_glm(y123, Eigen::MatrixXd::Ones(3, 1), FamilySpec::poisson()).coefficients(0);
  worst_p = std::max(worst_p, std::abs(b - std::log(2.0)));
  c.require(worst_p < 1e-10, "Poisson intercept vs log(mean y) max |diff| " + fmt("%.2e", worst_p) + " < 1e-10");
  const double secs = elapsed(t0);
  c.require(secs < 1.0, "runtime " + fmt("%.3f", secs) + " s < 1 s");
  return c;
}

Check calibration() {
  Check c;
  const auto t0 = Clock::now();
  const int reps = 2000, n0 = 200, q2 = 2;
  for (auto family : {FamilySpec::gaussian(), FamilySpec::poisson()}) {
    Rng rng = make_rng(2, family.log_link() ? 1 : 0);
    std::vector<double> p;
    double lr_sum = 0;
    for (int r = 0; r < reps; ++r) {
      const double b1 = 0.5, b2 = -0.3;
      const auto obj = make_object(family, rng, n0, 1.0, b1, b2, 1.0);
      std::vector<ModelObject> cluster{make_object(family, rng, n0, 1.5, b1, b2, 1.0),
                                       make_object(family, rng, n0, 0.5, b1, b2, 1.0)};
      const auto t = test_object_vs_cluster(obj, cluster, family);
      p.push_back(t.p_value);
      if (family.log_link()) {
        lr_sum += t.statistic;
      } else {
        // -2 log Lambda with the variance profiled out: n log(SSE_red / SSE_full).
        const double n = 3.0 * n0;
        lr_sum += n * std::log1p(t.statistic * q2 / static_cast<double>(*t.df_den));
      }
    }
    const double ks = ks_uniform(p);
    const double mean_lr = lr_sum / reps;
    const std::string tag = family.log_link() ? "LRT" : "F";
    c.require(ks < 0.05, tag + " KS " + fmt("%.4f", ks) + " < 0.05");
    c.require(std::abs(mean_lr - q2) <= 0.1 * q2, tag + " mean -2logL " + fmt("%.3f", mean_lr) + " within 10% of 2");
  }
  const double secs = elapsed(t0);
  c.require(secs < 120.0, "runtime " + fmt("%.1f", secs) + " s < 120 s");
  return c;
}

Check brute_force() {
  Check c;
  const auto t0 = Clock::now();
  int hits = 0;
  const auto gaussian = FamilySpec::gaussian();
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng = make_rng(3, static_cast<std::uint64_t>(trial));
    std::vector<ModelObject> objs;
    for (int i = 0; i < 6; ++i) {
      const double s = i < 3 ? 0.5 : -0.5;
      objs.push_back(make_object(gaussian, rng, 20, static_cast<double>(i), s, s, 1.0));
    }
    EngineConfig cfg;
    cfg.k = 2;
    cfg.n_restarts = 10;
    cfg.rng_seed = static_cast<std::uint64_t>(trial);
    const auto res = run(objs, cfg);
    const double got = fit_clustered(ClusteredDesign{objs, res.assignment, 2}, gaussian).deviance;
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < 32; ++mask) {
      std::vector<int> a(6, 0);
      for (int i = 1; i < 6; ++i) a[static_cast<std::size_t>(i)] = (mask >> (i - 1)) & 1;
      best = std::min(best, fit_clustered(ClusteredDesign{objs, a, 2}, gaussian).deviance);
    }
    hits += got <= best + 1e-8 * (1 + best);
  }
  c.require(hits >= 95, "minimum deviance attained in " + std::to_string(hits) + "/100 >= 95");
  const double secs = elapsed(t0);
  c.require(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s < 60 s");
  return c;
}

Check peak_formula() {
  Check c;
  const double alpha = 7.77, beta = -0.290;
  const Date t0 = parse_date("2020-01-11");
  const auto off = peak_offset(alpha, beta);
  c.require(off.has_value(), "peak defined for alpha > 0, beta < 0");
  if (!off) return c;
  const std::string date = format_date(peak_date(t0, *off));
  c.require(date == "2020-02-06" || date == "2020-02-07", "peak " + date);
  double best_t = 0, best = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 1000; ++i) {
    const double t = 0.1 * i;
    const double lambda = std::exp(alpha * std::log(t) + beta * t);
    if (lambda > best) best = lambda, best_t = t;
  }
  c.require(std::abs(best_t - *off) <= 0.2, "grid argmax " + fmt("%.1f", best_t) + " vs " + fmt("%.3f", *off) +
                                                " days within 0.2");
  // The same through a fitted curve.
  Rng rng = make_rng(8, 0);
  RegionSeries s{"X", {}, {}};
  for (int d = 1; d <= 80; ++d) {
    s.dates.push_back(t0 + std::chrono::days{d});
    s.counts.push_back(static_cast<double>(
        std::poisson_distribution<long>(std::exp(-2.0 + alpha * std::log(d) + beta * d))(rng)));
  }
  const auto g = fit_growth(s, GrowthModel::Gamma, t0);
  if (g.peak_offset) {
    double bt = 0, bv = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 1000; ++i) {
      const double t = 0.1 * i;
      const double v = std::exp(g.mu + g.alpha * std::log(t) + g.beta * t);
      if (v > bv) bv = v, bt = t;
    }
    c.require(std::abs(bt - *g.peak_offset) <= 0.2, "fitted-curve grid argmax within 0.2 days");
  } else {
    c.require(false, "fitted curve has a peak");
  }
  return c;
}

Check properties() {
  Check c;
  int total = 0, passed = 0;
  auto tally = [&](bool ok) {
    ++total;
    passed += ok;
  };

  // Non-empty clusters and determinism under seed.
  for (int trial = 0; trial < 20; ++trial) {
    SimConfig cfg;
    cfg.family = trial % 2 ? FamilySpec::quasi_poisson() : FamilySpec::gaussian();
    cfg.k_true = 3;
    cfg.c = 4;
    cfg.n0 = 20;
    cfg.sigma = 1.0;
    Rng rng = make_rng(9, static_cast<std::uint64_t>(trial));
    const auto data = generate(cfg, rng);
    EngineConfig ec;
    ec.family = cfg.family;
    ec.rng_seed = static_cast<std::uint64_t>(trial);
    for (int k = 1; k <= 6; ++k) {
      ec.k = k;
      const auto a = run(data.objects, ec);
      const auto b = run(data.objects, ec);
      std::set<int> used(a.assignment.begin(), a.assignment.end());
      tally(static_cast<int>(used.size()) == k);
      tally(a.assignment == b.assignment && a.objective == b.objective);
    }
  }
  const double nonempty_det = static_cast<double>(passed) / total;

  // Nesting monotonicity: splitting a cluster never raises the deviance.
  int n_total = 0, n_passed = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto family = trial % 2 ? FamilySpec::poisson() : FamilySpec::gaussian();
    Rng rng = make_rng(10, static_cast<std::uint64_t>(trial));
    std::vector<ModelObject> objs;
    for (int i = 0; i < 8; ++i) objs.push_back(make_object(family, rng, 15, 1.0, i % 2 ? 0.6 : -0.6, 0.2, 1.0));
    std::uniform_int_distribution<int> lab(0, 2);
    std::vector<int> a(8);
    for (auto& v : a) v = lab(rng);
    a[0] = 0, a[1] = 1, a[2] = 2;
    std::vector<int> split = a;
    for (int i = 3; i < 8; ++i)
      if (a[static_cast<std::size_t>(i)] == 0) {
        split[static_cast<std::size_t>(i)] = 3;
        break;
      }
    const int k_split = *std::max_element(split.begin(), split.end()) + 1;
    const double coarse = fit_clustered(ClusteredDesign{objs, a, 3}, family).deviance;
    const double fine = fit_clustered(ClusteredDesign{objs, split, k_split}, family).deviance;
    ++n_total;
    n_passed += fine <= coarse + 1e-8 * (1 + coarse);
  }

  // CE label-permutation invariance.
  int p_total = 0, p_passed = 0;
  Rng rng = make_rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> lab(0, 4);
    Partition a(15), b(15);
    for (auto& v : a) v = lab(rng);
    for (auto& v : b) v = lab(rng);
    std::vector<int> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    Partition pa(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = perm[static_cast<std::size_t>(a[i])];
    ++p_total;
    p_passed += clustering_error(pa, a) == 0.0 && clustering_error(pa, b) == clustering_error(a, b);
  }

  c.require(passed == total, "non-empty clusters + determinism " + std::to_string(passed) + "/" + std::to_string(total));
  c.require(n_passed == n_total, "nesting monotonicity " + std::to_string(n_passed) + "/" + std::to_string(n_total));
  c.require(p_passed == p_total, "CE permutation invariance " + std::to_string(p_passed) + "/" + std::to_string(p_total));
  (void)nonempty_det;
  return c;
}

Check synthetic_substitutes() {
  Check c;
  c.require(true, "published coefficient tables and partial R^2 values excluded (data snapshot unavailable)");
  const Date t0 = parse_date("2020-01-11");
  Rng rng = make_rng(12, 0);
  RegionSeries s{"X", {}, {}};
  const double mu = -10, alpha = 8, beta = -0.3;
  for (int d = 1; d <= 120; ++d) {
    s.dates.push_back(t0 + std::chrono::days{d});
    s.counts.push_back(
        static_cast<double>(std::poisson_distribution<long>(std::exp(mu + alpha * std::log(d) + beta * d))(rng)));
  }
  const auto g = fit_growth(s, GrowthModel::Gamma, t0);
  const double zm = std::abs(g.mu - mu) / g.se_mu, za = std::abs(g.alpha - alpha) / g.se_alpha,
               zb = std::abs(g.beta - beta) / g.se_beta;
  c.require(zm < 3 && za < 3 && zb < 3,
            "synthetic Gamma fit within 3 SE (z = " + fmt("%.2f", zm) + ", " + fmt("%.2f", za) + ", " + fmt("%.2f", zb) + ")");

  std::vector<RegionSeries> regions;
  std::normal_distribution<double> jitter(0.0, 0.5);
  for (int i = 0; i < 6; ++i) {
    const bool first = i < 3;
    RegionSeries r{"R" + std::to_string(i), {}, {}};
    const double m = (first ? -49.0 : -25.0) + jitter(rng);
    for (int d = 44; d < 104; ++d) {
      r.dates.push_back(t0 + std::chrono::days{d});
      const double lam = std::exp(m + (first ? 18.0 : 9.0) * std::log(d) + (first ? -0.3 : -0.1) * d);
      r.counts.push_back(static_cast<double>(std::poisson_distribution<long>(lam)(rng)));
    }
    regions.push_back(std::move(r));
  }
  ClusterOptions opt;
  opt.k = 1;
  const double r1 = cluster_regions(regions, t0, opt).partial_r_squared;
  opt.k = 6;
  const double r6 = cluster_regions(regions, t0, opt).partial_r_squared;
  c.require(std::abs(r1) < 1e-12 && std::abs(r6 - 1) < 1e-12,
            "partial R^2 at k=1 " + fmt("%.3g", r1) + ", at k=N " + fmt("%.6f", r6));
  return c;
}

}  // namespace

int main() {
  report(1, "GLM correctness", glm_correctness);
  report(2, "test calibration", calibration);
  report(3, "brute-force bipartition oracle", brute_force);

  SimReport gauss;
  bool gauss_ok = false;
  report(4, "regression regime, IC (sigma=0.5, c=10, n0=50, k=2, 200 reps)", [&] {
    Check c;
    gauss = study(FamilySpec::gaussian(), 2);
    gauss_ok = true;
    const double bic = summary(gauss, "BIC").ic, aic = summary(gauss, "AIC").ic;
    c.require(gauss.completed == 200, std::to_string(gauss.completed) + " replications completed");
    c.require(bic >= 90, "BIC IC " + fmt("%.1f", bic) + " >= 90");
    c.require(aic <= 40, "AIC IC " + fmt("%.1f", aic) + " <= 40");
    c.require(gauss.seconds < 900, "runtime " + fmt("%.1f", gauss.seconds) + " s < 900 s");
    return c;
  });
  report(5, "regression regime, OE (same run)", [&] {
    Check c;
    if (!gauss_ok) {
      c.require(false, "criterion 4 run unavailable");
      return c;
    }
    const double oe = summary(gauss, "BIC").oe;
    c.require(oe <= 2.0, "BIC OE " + fmt("%.2f", oe) + " <= 2.0");
    return c;
  });
  report(6, "loglinear regime, IC (c=10, n0=50, k=2, 200 reps)", [&] {
    Check c;
    const auto r = study(FamilySpec::poisson(), 2);
    const double bic = summary(r, "BIC").ic;
    c.require(r.completed == 200, std::to_string(r.completed) + " replications completed");
    c.require(bic >= 85, "BIC IC " + fmt("%.1f", bic) + " >= 85");
    c.require(r.seconds < 900, "runtime " + fmt("%.1f", r.seconds) + " s < 900 s");
    return c;
  });
  report(7, "loglinear regime, OE (c=10, n0=50, k=3, 200 reps)", [&] {
    Check c;
    const auto r = study(FamilySpec::poisson(), 3);
    const double oe = summary(r, "BIC").oe;
    c.require(r.completed == 200, std::to_string(r.completed) + " replications completed");
    c.require(oe <= 2.0, "BIC OE " + fmt("%.2f", oe) + " <= 2.0");
    c.require(r.seconds < 900, "runtime " + fmt("%.1f", r.seconds) + " s < 900 s");
    return c;
  });
  report(8, "peak formula", peak_formula);
  report(9, "property suites", properties);
  report(10, "published application results (excluded; synthetic substitutes)", synthetic_substitutes);

  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
