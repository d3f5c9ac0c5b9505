#include "glmclust/model_selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "glmclust/glm.hpp"

namespace glmclust {

double CriterionSpec::kappa_for(Eigen::Index n_observations) const {
  switch (criterion) {
    case Criterion::AIC: return 2.0;
    case Criterion::BIC: return std::log(static_cast<double>(n_observations));
    case Criterion::Custom: return kappa;
  }
  return kappa;
}

std::string CriterionSpec::name() const {
  switch (criterion) {
    case Criterion::AIC: return "AIC";
    case Criterion::BIC: return "BIC";
    case Criterion::Custom: break;
  }
  std::ostringstream os;
  os << "GIC(" << kappa << ")";
  return os.str();
}

CriterionSpec parse_criterion(std::string_view text) {
  if (text == "aic" || text == "AIC") return CriterionSpec::aic();
  if (text == "bic" || text == "BIC") return CriterionSpec::bic();
  double kappa = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), kappa);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !(kappa > 0))
    throw InputError("criterion must be aic, bic or a positive kappa");
  return CriterionSpec::custom(kappa);
}

const ClusterResult& GICTrace::selected() const {
  for (std::size_t i = 0; i < k_values.size(); ++i)
    if (k_values[i] == selected_k) return clusterings.at(i);
  throw InputError("trace has no clustering for the selected k");
}

double gic_score(std::span<const ModelObject> objects, std::span<const int> assignment, int k,
                 const FamilySpec& family, double kappa, std::optional<double> dispersion) {
  if (family.has_dispersion() && !dispersion) throw MissingDispersion("family needs a dispersion estimate");
  if (family.has_dispersion() && !(*dispersion > 0)) throw InputError("dispersion must be positive");
  ClusteredDesign design{objects, std::vector<int>(assignment.begin(), assignment.end()), k};
  const auto fit = fit_clustered(design, family);
  const double scale = family.has_dispersion() ? *dispersion : 1.0;
  return fit.deviance / scale + kappa * k * static_cast<double>(design.q2());
}

double dispersion_at_kplus1(ModelTester& tester, int k, const EngineConfig& config) {
  if (!tester.family().has_dispersion()) throw InputError("family has no dispersion parameter");
  if (k + 1 > tester.size()) throw InputError("dispersion rule needs k + 1 <= number of objects");
  EngineConfig c = config;
  c.k = k + 1;
  c.rng_seed = substream_seed(config.rng_seed, static_cast<std::uint64_t>(k + 1));
  const auto result = run(tester, c);
  const auto fit = tester.clustering(result.assignment, c.k);
  return estimate_dispersion(fit.pearson, fit.n_observations - fit.n_coefficients);
}

double dispersion_at_kplus1(std::span<const ModelObject> objects, int k, const EngineConfig& config) {
  ModelTester tester(objects, config.family);
  return dispersion_at_kplus1(tester, k, config);
}

int default_k_max(int n_objects) { return std::max(1, std::min(10, n_objects - 1)); }

ClusterPath cluster_path(ModelTester& tester, int k_min, int k_max, const EngineConfig& config) {
  const bool needs_dispersion = tester.family().has_dispersion();
  const int last = needs_dispersion ? k_max + 1 : k_max;
  if (k_min < 1 || k_min > k_max) throw InputError("need 1 <= k_min <= k_max");
  if (last > tester.size())
    throw InputError(needs_dispersion ? "k_max + 1 exceeds the number of objects" : "k_max exceeds the number of objects");

  ClusterPath path;
  path.k_min = k_min;
  path.k_max = k_max;
  path.family = tester.family();
  path.n_observations = tester.total_observations();
  path.q2 = tester.q2();
  for (int k = k_min; k <= last; ++k) {
    EngineConfig c = config;
    c.k = k;
    c.rng_seed = substream_seed(config.rng_seed, static_cast<std::uint64_t>(k));
    path.runs.push_back(run(tester, c));
    path.fits.push_back(tester.clustering(path.runs.back().assignment, k));
  }
  return path;
}

GICTrace score_path(const ClusterPath& path, const CriterionSpec& criterion) {
  GICTrace trace;
  trace.kappa = criterion.kappa_for(path.n_observations);
  trace.criterion_name = criterion.name();
  const bool needs_dispersion = path.family.has_dispersion();
  for (int k = path.k_min; k <= path.k_max; ++k) {
    const GroupFit& fit = path.fit_at(k);
    double scale = 1.0;
    std::optional<double> dispersion;
    if (needs_dispersion) {
      const GroupFit& next = path.fit_at(k + 1);
      dispersion = estimate_dispersion(next.pearson, next.n_observations - next.n_coefficients);
      scale = *dispersion;
    }
    double score = fit.deviance / scale + trace.kappa * k * static_cast<double>(path.q2);
    // A perfect k + 1 fit leaves no scale; the k-cluster deviance then
    // decides: zero stays zero, anything else is infinitely bad.
    if (!(scale > 0)) score = fit.deviance > 0 ? std::numeric_limits<double>::max() : trace.kappa * k * static_cast<double>(path.q2);
    trace.k_values.push_back(k);
    trace.scores.push_back(score);
    trace.dispersions.push_back(dispersion);
    trace.deviances.push_back(fit.deviance);
    trace.clusterings.push_back(path.run_at(k));
  }
  // Ties resolve to the smallest k.
  const auto best = std::min_element(trace.scores.begin(), trace.scores.end());
  trace.selected_k = trace.k_values[static_cast<std::size_t>(best - trace.scores.begin())];
  return trace;
}

GICTrace select_k(ModelTester& tester, int k_min, int k_max, const CriterionSpec& criterion,
                  const EngineConfig& config) {
  return score_path(cluster_path(tester, k_min, k_max, config), criterion);
}

GICTrace select_k(std::span<const ModelObject> objects, int k_min, int k_max, const CriterionSpec& criterion,
                  const EngineConfig& config) {
  ModelTester tester(objects, config.family);
  return select_k(tester, k_min, k_max, criterion, config);
}

}  // namespace glmclust
