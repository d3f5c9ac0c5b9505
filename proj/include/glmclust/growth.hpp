#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glmclust/cluster_engine.hpp"
#include "glmclust/model.hpp"
#include "glmclust/model_selection.hpp"

namespace glmclust {

using Date = std::chrono::sys_days;

/// Strict YYYY-MM-DD.
Date parse_date(std::string_view text);
std::string format_date(Date date);

struct RegionSeries {
  std::string region;
  std::vector<Date> dates;
  std::vector<double> counts;
};

struct DateWindow {
  std::optional<Date> start;
  std::optional<Date> end;
};

struct SeriesLoad {
  std::vector<RegionSeries> regions;
  int clamped_negative = 0;
  int dropped_outside_window = 0;
  int dropped_not_after_t0 = 0;
};

/// Reads `date,region,new_cases` CSV. Regions keep their order of first
/// appearance and each series is sorted by date. Negative counts are
/// clamped to zero with a warning; rows outside the window or not after t0
/// are dropped.
SeriesLoad load_series(std::istream& in, Date t0, const DateWindow& window = {});
SeriesLoad load_series(const std::string& path, Date t0, const DateWindow& window = {});

enum class GrowthModel { Exponential, Gamma };

GrowthModel growth_model_from_name(std::string_view name);

struct GrowthFit {
  GrowthModel model = GrowthModel::Gamma;
  double mu = 0;
  double alpha = 0;  // Gamma only
  double beta = 0;
  double se_mu = 0;
  double se_alpha = 0;  // Gamma only
  double se_beta = 0;
  double dispersion = 1;
  double deviance = 0;
  double null_deviance = 0;
  double r_squared = 0;
  int n = 0;
  bool converged = false;
  /// Days after t0 at which the fitted curve peaks; set iff alpha > 0 and beta < 0.
  std::optional<double> peak_offset;
  std::optional<Date> peak_date;

  bool out_of_control() const { return beta >= 0; }
};

/// t0 - alpha/beta, expressed as days after t0, when alpha > 0 and beta < 0.
std::optional<double> peak_offset(double alpha, double beta);
/// t0 plus the offset rounded to the nearest day.
Date peak_date(Date t0, double offset_days);

/// Design for one region: free block [1], clustered block
/// [log(t - t0), t - t0] with t - t0 in days.
ModelObject growth_object(const RegionSeries& series, Date t0);

/// Quasi-Poisson log-linear fit of log(lambda) = mu + beta (t - t0)
/// (exponential) or mu + alpha log(t - t0) + beta (t - t0) (Gamma).
GrowthFit fit_growth(const RegionSeries& series, GrowthModel model, Date t0);

struct ClusterOptions {
  CriterionSpec criterion = CriterionSpec::bic();
  /// Fixed number of clusters; unset selects k by the criterion.
  std::optional<int> k;
  int k_max = 0;  // 0: min(10, N - 1)
  FamilySpec family = FamilySpec::quasi_poisson();
  int n_restarts = 10;
  int max_sweeps = 50;
  std::uint64_t rng_seed = 0;
};

struct ClusterSummary {
  int cluster = 0;
  std::string representative;
  std::vector<std::string> members;
  double alpha = 0, beta = 0, se_alpha = 0, se_beta = 0;
  std::optional<Date> peak;
};

struct ClusterReport {
  Date t0{};
  FamilySpec family;
  std::vector<RegionSeries> series;
  std::vector<int> assignment;
  int k = 0;
  std::vector<ClusterSummary> clusters;
  std::vector<double> region_mu;
  std::vector<Eigen::VectorXd> fitted;
  double dispersion = 1;
  double deviance_one = 0;
  double deviance_k = 0;
  double deviance_all = 0;
  double partial_r_squared = 0;
  std::optional<GICTrace> trace;
};

/// Clusters regions on the (alpha, beta) block with per-region intercepts.
/// The partial R^2 is the share of the one-cluster to one-per-region
/// deviance reduction achieved with k clusters.
ClusterReport cluster_regions(const std::vector<RegionSeries>& series, Date t0, const ClusterOptions& options);

/// Writes clusters.csv, assignment.csv, fitted.csv, gic.csv and summary.txt.
void emit_report(const ClusterReport& report, const std::string& out_dir);

}  // namespace glmclust
