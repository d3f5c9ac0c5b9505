#include "glmclust/metrics.hpp"

#include "glmclust/errors.hpp"

namespace glmclust {

double clustering_error(std::span<const int> estimate, std::span<const int> truth) {
  if (estimate.size() != truth.size()) throw LengthMismatch("clustering_error: partitions differ in length");
  const std::size_t n = truth.size();
  if (n < 2) throw InputError("clustering_error needs at least two objects");
  std::size_t disagree = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      disagree += (estimate[i] == estimate[j]) != (truth[i] == truth[j]);
  return static_cast<double>(disagree) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double object_error_percent(std::span<const Partition> estimates, std::span<const int> truth) {
  if (estimates.empty()) throw EmptyList("object_error_percent: no estimates");
  double sum = 0;
  for (const auto& e : estimates) sum += clustering_error(e, truth);
  return 100.0 * sum / static_cast<double>(estimates.size());
}

double identified_correctly_percent(std::span<const int> k_hats, int k_true) {
  if (k_hats.empty()) throw EmptyList("identified_correctly_percent: no estimates");
  std::size_t hits = 0;
  for (int k : k_hats) hits += k == k_true;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(k_hats.size());
}

}  // namespace glmclust
