#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "glmclust/errors.hpp"
#include "glmclust/family.hpp"

namespace glmclust {

/// One object: a response vector with its design split into an
/// object-specific block (x1, free within clusters) and a clustered block
/// (x2, shared by every member of a cluster).
template <typename Scalar>
struct BasicModelObject {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::string id;
  Vector y;
  Matrix x1;
  Matrix x2;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index q1() const { return x1.cols(); }
  Eigen::Index q2() const { return x2.cols(); }
};

using ModelObject = BasicModelObject<double>;

template <typename Derived>
void validate_response(const Eigen::MatrixBase<Derived>& y, const FamilySpec& family) {
  using Scalar = typename Derived::Scalar;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const Scalar v = y(i);
    if (!std::isfinite(static_cast<double>(v))) throw InvalidResponse("response is not finite");
    if (family.log_link()) {
      if (v < Scalar(0)) throw InvalidResponse("negative count in response");
      if (std::floor(v) != v) throw InvalidResponse("non-integer count in response");
    }
  }
}

/// Shape and response checks. Column rank is checked by the fitters.
template <typename Scalar>
void validate(const BasicModelObject<Scalar>& obj, const FamilySpec& family) {
  const auto n = obj.n();
  if (obj.x1.rows() != n || obj.x2.rows() != n)
    throw LengthMismatch("object '" + obj.id + "': design rows do not match response length");
  if (obj.q2() < 1) throw InputError("object '" + obj.id + "': clustered block needs q2 >= 1");
  if (n < obj.q1() + obj.q2() + 1)
    throw InputError("object '" + obj.id + "': needs at least q1 + q2 + 1 observations");
  validate_response(obj.y, family);
}

template <typename Scalar>
void validate_compatible(std::span<const BasicModelObject<Scalar>> objects) {
  if (objects.empty()) throw EmptyList("no objects");
  for (const auto& o : objects)
    if (o.q1() != objects.front().q1() || o.q2() != objects.front().q2())
      throw InputError("objects disagree on q1/q2");
}

template <typename Scalar>
struct BasicFitResult {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector coefficients;
  Vector fitted_means;
  Scalar deviance = 0;
  /// For QuasiPoissonLog this is the Poisson quasi-likelihood.
  Scalar loglik = 0;
  bool loglik_is_quasi = false;
  Scalar pearson = 0;
  Eigen::Index residual_df = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<Scalar> deviance_trace;
  /// (X' W X)^{-1} at the final weights; multiply by the dispersion for
  /// the coefficient covariance.
  Matrix unscaled_covariance;
};

using FitResult = BasicFitResult<double>;

/// Objects with a cluster label each (0-based). The implied model has one
/// free coefficient block per object and one shared block per cluster.
template <typename Scalar>
struct BasicClusteredDesign {
  std::span<const BasicModelObject<Scalar>> objects;
  std::vector<int> assignment;
  int k = 0;

  Eigen::Index q1() const { return objects.front().q1(); }
  Eigen::Index q2() const { return objects.front().q2(); }
  Eigen::Index n_coefficients() const {
    return static_cast<Eigen::Index>(objects.size()) * q1() + k * q2();
  }
  Eigen::Index n_observations() const {
    Eigen::Index n = 0;
    for (const auto& o : objects) n += o.n();
    return n;
  }

  std::vector<std::vector<int>> members() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < assignment.size(); ++i)
      out[static_cast<std::size_t>(assignment[i])].push_back(static_cast<int>(i));
    return out;
  }

  void validate() const {
    validate_compatible(objects);
    if (assignment.size() != objects.size())
      throw LengthMismatch("assignment length differs from object count");
    if (k < 1) throw InputError("clustered design needs k >= 1");
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : assignment) {
      if (a < 0 || a >= k) throw InputError("cluster label out of range");
      ++sizes[static_cast<std::size_t>(a)];
    }
    for (int s : sizes)
      if (s == 0) throw InputError("empty cluster in clustered design");
  }
};

using ClusteredDesign = BasicClusteredDesign<double>;

}  // namespace glmclust
