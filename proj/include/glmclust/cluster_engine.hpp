#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glmclust/family.hpp"
#include "glmclust/model.hpp"
#include "glmclust/model_tests.hpp"
#include "glmclust/random.hpp"

namespace glmclust {

struct EngineConfig {
  int k = 2;
  int max_sweeps = 50;
  int n_restarts = 10;
  std::uint64_t rng_seed = 0;
  FamilySpec family = FamilySpec::gaussian();
};

/// Cluster labels are 0-based here; the CLI prints them 1-based.
struct ClusterResult {
  std::vector<int> assignment;
  int k = 0;
  /// Sum over objects of the test statistic against the object's own
  /// cluster with the object removed. Lower is better.
  double objective = 0;
  std::vector<double> per_object_log_p;
  int sweeps_used = 0;
  bool converged = false;
  int restart = 0;
};

/// Minimax seeding: a uniformly drawn first seed, then repeatedly the object
/// whose largest pairwise p-value against the chosen seeds is smallest.
/// Ties go to the lowest object index.
std::vector<int> select_seeds(ModelTester& tester, int k, Rng& rng);

/// Seed t anchors cluster t; every other object joins the seed it has the
/// largest pairwise log p-value with.
std::vector<int> initial_assign(ModelTester& tester, std::span<const int> seeds);

struct SweepOutcome {
  std::vector<int> assignment;
  /// Self-test results for the input assignment.
  std::vector<double> self_log_p;
  std::vector<double> self_statistic;
  double objective = 0;
  std::vector<int> pinned;
};

/// One synchronous pass: in every cluster the member with the largest
/// self-test log p-value is pinned; every other object moves to the cluster
/// with the largest log p-value (own cluster tested with itself removed).
SweepOutcome sweep(ModelTester& tester, std::span<const int> assignment, int k);

ClusterResult run(ModelTester& tester, const EngineConfig& config);
ClusterResult run(std::span<const ModelObject> objects, const EngineConfig& config);

}  // namespace glmclust
