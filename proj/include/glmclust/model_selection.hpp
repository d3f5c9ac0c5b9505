#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glmclust/cluster_engine.hpp"
#include "glmclust/model.hpp"
#include "glmclust/model_tests.hpp"

namespace glmclust {

enum class Criterion { AIC, BIC, Custom };

struct CriterionSpec {
  Criterion criterion = Criterion::BIC;
  /// Used only when criterion == Custom.
  double kappa = 0;

  static CriterionSpec aic() { return {Criterion::AIC, 0}; }
  static CriterionSpec bic() { return {Criterion::BIC, 0}; }
  static CriterionSpec custom(double kappa) { return {Criterion::Custom, kappa}; }

  /// kappa = 2 for AIC, log(n) for BIC with n the total observation count.
  double kappa_for(Eigen::Index n_observations) const;
  std::string name() const;
};

/// "aic", "bic", or a positive number taken as a custom kappa.
CriterionSpec parse_criterion(std::string_view text);

struct GICTrace {
  std::vector<int> k_values;
  std::vector<double> scores;
  /// Dispersion estimated with k + 1 clusters; empty for Poisson.
  std::vector<std::optional<double>> dispersions;
  std::vector<double> deviances;
  std::vector<ClusterResult> clusterings;
  int selected_k = 0;
  double kappa = 0;
  std::string criterion_name;

  const ClusterResult& selected() const;
};

/// GIC of a given clustering. Poisson: G^2 + kappa*k*q2 (the y! constant of
/// -2 log L is dropped, it does not depend on k). Gaussian: SSE/sigma^2 +
/// kappa*k*q2. Quasi-Poisson: G^2/phi + kappa*k*q2.
double gic_score(std::span<const ModelObject> objects, std::span<const int> assignment, int k,
                 const FamilySpec& family, double kappa, std::optional<double> dispersion);

/// Dispersion estimate from the best clustering with k + 1 clusters.
double dispersion_at_kplus1(std::span<const ModelObject> objects, int k, const EngineConfig& config);
double dispersion_at_kplus1(ModelTester& tester, int k, const EngineConfig& config);

/// Best clusterings for every k in [k_min, k_max], plus k_max + 1 when the
/// family needs a dispersion estimate. Shared by all criteria.
struct ClusterPath {
  int k_min = 1;
  int k_max = 1;
  FamilySpec family;
  Eigen::Index n_observations = 0;
  Eigen::Index q2 = 0;
  /// Indexed by k - k_min.
  std::vector<ClusterResult> runs;
  std::vector<GroupFit> fits;

  const ClusterResult& run_at(int k) const { return runs.at(static_cast<std::size_t>(k - k_min)); }
  const GroupFit& fit_at(int k) const { return fits.at(static_cast<std::size_t>(k - k_min)); }
};

/// Per-k engine runs draw from substream k of config.rng_seed.
ClusterPath cluster_path(ModelTester& tester, int k_min, int k_max, const EngineConfig& config);

GICTrace score_path(const ClusterPath& path, const CriterionSpec& criterion);

/// Default upper bound for k: min(10, N - 1).
int default_k_max(int n_objects);

GICTrace select_k(std::span<const ModelObject> objects, int k_min, int k_max, const CriterionSpec& criterion,
                  const EngineConfig& config);
GICTrace select_k(ModelTester& tester, int k_min, int k_max, const CriterionSpec& criterion,
                  const EngineConfig& config);

}  // namespace glmclust
