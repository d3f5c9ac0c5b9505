#include "glmclust/cluster_engine.hpp"

#include <algorithm>
#include <limits>

namespace glmclust {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_config(const ModelTester& tester, const EngineConfig& config) {
  if (config.k < 1 || config.k > tester.size()) throw InputError("k must lie in [1, number of objects]");
  if (config.n_restarts < 1) throw InputError("n_restarts must be at least 1");
  if (config.max_sweeps < 1) throw InputError("max_sweeps must be at least 1");
  if (!(config.family == tester.family())) throw InputError("engine family differs from the tester's");
}

}  // namespace

std::vector<int> select_seeds(ModelTester& tester, int k, Rng& rng) {
  const int n = tester.size();
  if (k < 1 || k > n) throw InputError("select_seeds: k must lie in [1, number of objects]");
  std::vector<int> seeds;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  const int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
  seeds.push_back(first);
  taken[static_cast<std::size_t>(first)] = 1;

  // worst[i] = max over chosen seeds of log p(seed, i).
  std::vector<double> worst(static_cast<std::size_t>(n), kNegInf);
  while (static_cast<int>(seeds.size()) < k) {
    const int latest = seeds.back();
    int best = -1;
    double best_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      auto& w = worst[static_cast<std::size_t>(i)];
      w = std::max(w, tester.pairwise(latest, i).log_p);
      if (w < best_value) {
        best_value = w;
        best = i;
      }
    }
    seeds.push_back(best);
    taken[static_cast<std::size_t>(best)] = 1;
  }
  return seeds;
}

std::vector<int> initial_assign(ModelTester& tester, std::span<const int> seeds) {
  const int n = tester.size();
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (std::size_t t = 0; t < seeds.size(); ++t) assignment.at(static_cast<std::size_t>(seeds[t])) = static_cast<int>(t);
  for (int i = 0; i < n; ++i) {
    if (assignment[static_cast<std::size_t>(i)] >= 0) continue;
    int best = 0;
    double best_value = kNegInf;
    for (std::size_t t = 0; t < seeds.size(); ++t) {
      const double lp = tester.pairwise(seeds[t], i).log_p;
      if (lp > best_value) {
        best_value = lp;
        best = static_cast<int>(t);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
  }
  return assignment;
}

SweepOutcome sweep(ModelTester& tester, std::span<const int> assignment, int k) {
  const int n = tester.size();
  if (static_cast<int>(assignment.size()) != n) throw LengthMismatch("sweep: assignment length");
  std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) members.at(static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])).push_back(i);
  for (const auto& m : members)
    if (m.empty()) throw InputError("sweep: empty cluster");

  SweepOutcome out;
  out.self_log_p.resize(static_cast<std::size_t>(n));
  out.self_statistic.resize(static_cast<std::size_t>(n));
  std::vector<double> log_p(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  std::vector<int> others;
  for (int i = 0; i < n; ++i) {
    const int own = assignment[static_cast<std::size_t>(i)];
    for (int s = 0; s < k; ++s) {
      const auto& group = members[static_cast<std::size_t>(s)];
      others.clear();
      for (int j : group)
        if (j != i) others.push_back(j);
      const TestOutcome t = tester.test(i, others);
      log_p[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(s)] = t.log_p;
      if (s == own) {
        out.self_log_p[static_cast<std::size_t>(i)] = t.log_p;
        out.self_statistic[static_cast<std::size_t>(i)] = t.statistic;
      }
    }
  }
  for (double s : out.self_statistic) out.objective += s;

  out.assignment.assign(assignment.begin(), assignment.end());
  std::vector<char> pinned(static_cast<std::size_t>(n), 0);
  for (const auto& group : members) {
    int keep = group.front();
    for (int j : group)
      if (out.self_log_p[static_cast<std::size_t>(j)] > out.self_log_p[static_cast<std::size_t>(keep)]) keep = j;
    pinned[static_cast<std::size_t>(keep)] = 1;
    out.pinned.push_back(keep);
  }
  for (int i = 0; i < n; ++i) {
    if (pinned[static_cast<std::size_t>(i)]) continue;
    int best = 0;
    double best_value = kNegInf;
    for (int s = 0; s < k; ++s) {
      const double lp = log_p[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(s)];
      if (lp > best_value) {
        best_value = lp;
        best = s;
      }
    }
    out.assignment[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

ClusterResult run(ModelTester& tester, const EngineConfig& config) {
  check_config(tester, config);
  std::vector<std::vector<int>> starts;
  std::vector<ClusterResult> results;
  ClusterResult best;
  bool have_best = false;

  for (int r = 0; r < config.n_restarts; ++r) {
    Rng rng = make_rng(config.rng_seed, static_cast<std::uint64_t>(r));
    const auto seeds = select_seeds(tester, config.k, rng);
    auto current = initial_assign(tester, seeds);

    // Identical starting partitions give identical restarts.
    ClusterResult result;
    if (auto it = std::find(starts.begin(), starts.end(), current); it != starts.end()) {
      result = results[static_cast<std::size_t>(it - starts.begin())];
    } else {
      starts.push_back(current);
      result.k = config.k;
      result.restart = r;
      result.objective = std::numeric_limits<double>::infinity();
      for (int s = 1; s <= config.max_sweeps; ++s) {
        auto outcome = sweep(tester, current, config.k);
        result.sweeps_used = s;
        // The sweep scores its input; keep the best assignment seen.
        if (outcome.objective < result.objective) {
          result.objective = outcome.objective;
          result.assignment = current;
          result.per_object_log_p = outcome.self_log_p;
        }
        if (outcome.assignment == current) {
          result.converged = true;
          break;
        }
        current = std::move(outcome.assignment);
      }
      results.push_back(result);
    }
    if (!have_best || result.objective < best.objective) {
      best = std::move(result);
      have_best = true;
    }
  }
  return best;
}

ClusterResult run(std::span<const ModelObject> objects, const EngineConfig& config) {
  ModelTester tester(objects, config.family);
  return run(tester, config);
}

}  // namespace glmclust
