#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "glmclust/glm.hpp"
#include "glmclust/simulation.hpp"

using namespace glmclust;

namespace {

const std::string kGolden = std::string(GLMCLUST_TEST_DATA) + "/golden/sim_5reps.csv";

std::vector<SimReport> golden_reports() {
  std::vector<SimReport> out;
  for (auto family : {FamilySpec::gaussian(), FamilySpec::poisson()}) {
    SimConfig cfg;
    cfg.family = family;
    cfg.replications = 5;
    cfg.rng_seed = 42;
    out.push_back(run_study(cfg));
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Generators, NoiselessRegressionRecoversCoefficients) {
  SimConfig cfg;
  cfg.sigma = 0;
  cfg.c = 3;
  Rng rng = make_rng(81, 0);
  const auto data = gen_regression(cfg, rng);
  const auto table = default_coefficients(cfg.family, 2);
  ASSERT_EQ(data.objects.size(), 6u);
  for (std::size_t i = 0; i < data.objects.size(); ++i) {
    const auto& o = data.objects[i];
    Eigen::MatrixXd x(o.n(), 3);
    x << o.x1, o.x2;
    const auto fit = fit_glm(o.y, x, FamilySpec::gaussian());
    const auto& b = table[static_cast<std::size_t>(data.truth[i])];
    EXPECT_NEAR(fit.coefficients(0), 1.0, 1e-10);
    EXPECT_NEAR(fit.coefficients(1), b[0], 1e-10);
    EXPECT_NEAR(fit.coefficients(2), b[1], 1e-10);
  }
}

TEST(Generators, DefaultTables) {
  EXPECT_EQ(default_coefficients(FamilySpec::gaussian(), 3),
            (std::vector<std::vector<double>>{{-0.06, -0.01}, {0.06, 0.01}, {-0.02, 0.01}}));
  EXPECT_EQ(default_coefficients(FamilySpec::poisson(), 3),
            (std::vector<std::vector<double>>{{1, 1}, {-1, -1}, {1, -1}}));
  EXPECT_THROW(default_coefficients(FamilySpec::poisson(), 4), InputError);
}

TEST(Generators, RegressionCovariateMoments) {
  SimConfig cfg;
  cfg.k_true = 1;
  cfg.c = 1000;
  cfg.n0 = 100;
  Rng rng = make_rng(82, 0);
  const auto data = gen_regression(cfg, rng);
  double s1 = 0, s2 = 0, ss2 = 0, lo = 1e9, hi = -1e9;
  for (const auto& o : data.objects) {
    s1 += o.x2.col(0).sum();
    s2 += o.x2.col(1).sum();
    ss2 += o.x2.col(1).squaredNorm();
    lo = std::min(lo, o.x2.col(0).minCoeff());
    hi = std::max(hi, o.x2.col(0).maxCoeff());
  }
  const double n = 1e5;
  EXPECT_NEAR(s1 / n, 44.0, 1.0);
  EXPECT_NEAR(s2 / n, 0.0, 0.05);
  EXPECT_NEAR(ss2 / n, 9.0, 0.2);
  EXPECT_GE(lo, 18.0);
  EXPECT_LE(hi, 70.0);
}

TEST(Generators, PoissonStructure) {
  SimConfig cfg;
  cfg.family = FamilySpec::poisson();
  cfg.k_true = 3;
  Rng rng = make_rng(83, 0);
  const auto data = gen_poisson(cfg, rng);
  ASSERT_EQ(data.objects.size(), 30u);
  ASSERT_EQ(data.truth.size(), 30u);
  for (int s = 0; s < 3; ++s) EXPECT_EQ(std::count(data.truth.begin(), data.truth.end(), s), 10);
  for (const auto& o : data.objects) {
    EXPECT_EQ(o.q1(), 1);
    EXPECT_EQ(o.q2(), 2);
    EXPECT_EQ(o.n(), 50);
    EXPECT_TRUE((o.y.array() >= 0).all());
  }
}

TEST(Generators, PoissonConditionalMean) {
  // Zero slopes: each object's counts are Poisson(exp(b0)), b0 ~ N(10, 1).
  SimConfig cfg;
  cfg.family = FamilySpec::poisson();
  cfg.k_true = 1;
  cfg.c = 2500;
  cfg.n0 = 4;
  cfg.coefficients = {{0.0, 0.0}};
  Rng rng = make_rng(84, 0);
  const auto data = gen_poisson(cfg, rng);
  double log_mean = 0, ratio = 0;
  for (const auto& o : data.objects) {
    const double m = o.y.mean();
    log_mean += std::log(m);
    ratio += (o.y.array() - m).square().sum() / 3.0 / m;
  }
  log_mean /= 2500;
  ratio /= 2500;
  EXPECT_NEAR(log_mean, 10.0, 0.06);
  EXPECT_NEAR(ratio, 1.0, 0.05);
}

TEST(Generators, Deterministic) {
  for (auto family : {FamilySpec::gaussian(), FamilySpec::poisson()}) {
    SimConfig cfg;
    cfg.family = family;
    Rng r1 = make_rng(85, 3), r2 = make_rng(85, 3);
    const auto a = generate(cfg, r1), b = generate(cfg, r2);
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
      EXPECT_EQ(a.objects[i].y, b.objects[i].y);
      EXPECT_EQ(a.objects[i].x2, b.objects[i].x2);
    }
  }
}

TEST(Config, Validation) {
  SimConfig cfg;
  cfg.replications = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.replications = 1;
  cfg.coefficients = {{1, 1}};
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.coefficients = {{1, 1}, {2}};
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.coefficients.clear();
  cfg.n0 = 3;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(Study, DeterministicAndBounded) {
  SimConfig cfg;
  cfg.replications = 4;
  cfg.rng_seed = 7;
  const auto a = run_study(cfg);
  const auto b = run_study(cfg);
  ASSERT_EQ(a.by_criterion.size(), 2u);
  EXPECT_EQ(a.completed, 4);
  EXPECT_EQ(a.failed, 0);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(a.by_criterion[c].k_hats, b.by_criterion[c].k_hats);
    EXPECT_EQ(a.by_criterion[c].errors, b.by_criterion[c].errors);
    EXPECT_GE(a.by_criterion[c].ic, 0);
    EXPECT_LE(a.by_criterion[c].ic, 100);
    EXPECT_GE(a.by_criterion[c].oe, 0);
    EXPECT_LE(a.by_criterion[c].oe, 100);
  }
  std::ostringstream sa, sb;
  emit_table({a}, TableFormat::Csv, sa);
  emit_table({b}, TableFormat::Csv, sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(EmitTable, EmptyIsHeaderOnly) {
  std::ostringstream os;
  emit_table({}, TableFormat::Csv, os);
  EXPECT_EQ(os.str(), "family,sigma_tau,c,n0,k,criterion,replications,IC,OE\n");
}

TEST(EmitTable, CsvRoundTrip) {
  SimReport rep;
  rep.config.sigma = 1.0;
  rep.completed = 3;
  rep.by_criterion = {{"AIC", {}, {}, 33.333333, 12.5}, {"BIC", {}, {}, 100, 0}};
  std::ostringstream os;
  emit_table({rep}, TableFormat::Csv, os);
  const auto rows = parse_csv(os.str());
  ASSERT_EQ(rows.size(), 3u);
  ASSERT_EQ(rows[1].size(), 9u);
  EXPECT_EQ(rows[1][0], "gaussian");
  EXPECT_DOUBLE_EQ(std::stod(rows[1][1]), 1.0);
  EXPECT_EQ(std::stoi(rows[1][2]), 10);
  EXPECT_EQ(std::stoi(rows[1][3]), 50);
  EXPECT_EQ(std::stoi(rows[1][4]), 2);
  EXPECT_EQ(rows[1][5], "AIC");
  EXPECT_EQ(std::stoi(rows[1][6]), 3);
  EXPECT_NEAR(std::stod(rows[1][7]), 33.33, 1e-12);
  EXPECT_NEAR(std::stod(rows[1][8]), 12.5, 1e-12);
  EXPECT_EQ(rows[2][5], "BIC");

  std::ostringstream txt;
  emit_table({rep}, TableFormat::Text, txt);
  EXPECT_NE(txt.str().find("BIC"), std::string::npos);
}

TEST(EmitTable, GoldenFiveReplications) {
  std::ostringstream os;
  emit_table(golden_reports(), TableFormat::Csv, os);
  if (std::getenv("GLMCLUST_UPDATE_GOLDEN")) {
    std::ofstream(kGolden, std::ios::binary) << os.str();
    GTEST_SKIP() << "golden file rewritten";
  }
  std::ifstream in(kGolden, std::ios::binary);
  ASSERT_TRUE(in) << kGolden;
  std::stringstream want;
  want << in.rdbuf();
  EXPECT_EQ(os.str(), want.str());
}
