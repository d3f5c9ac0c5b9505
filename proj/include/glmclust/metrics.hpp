#pragma once

#include <span>
#include <vector>

#include "glmclust/errors.hpp"

namespace glmclust {

/// Labels per object; only co-membership matters.
using Partition = std::vector<int>;

/// Fraction of the N(N-1)/2 object pairs on which the two partitions
/// disagree about co-membership (one minus the Rand index).
double clustering_error(std::span<const int> estimate, std::span<const int> truth);

/// 100 x mean clustering error over replications.
double object_error_percent(std::span<const Partition> estimates, std::span<const int> truth);

/// 100 x fraction of replications that selected k_true.
double identified_correctly_percent(std::span<const int> k_hats, int k_true);

}  // namespace glmclust
