#pragma once

#include <cmath>
#include <string_view>

#include <Eigen/Core>

#include "glmclust/errors.hpp"

namespace glmclust {

enum class FamilyKind { GaussianIdentity, PoissonLog, QuasiPoissonLog };

// Exponential-family descriptor: variance function, link and dispersion flag.
// Only canonical links are supported, so the IRWLS weight is v(mu).
struct FamilySpec {
  FamilyKind kind = FamilyKind::GaussianIdentity;

  static constexpr FamilySpec gaussian() { return {FamilyKind::GaussianIdentity}; }
  static constexpr FamilySpec poisson() { return {FamilyKind::PoissonLog}; }
  static constexpr FamilySpec quasi_poisson() { return {FamilyKind::QuasiPoissonLog}; }

  constexpr bool has_dispersion() const { return kind != FamilyKind::PoissonLog; }
  constexpr bool log_link() const { return kind != FamilyKind::GaussianIdentity; }

  template <typename Scalar>
  Scalar variance(Scalar mu) const {
    return log_link() ? mu : Scalar(1);
  }
  template <typename Scalar>
  Scalar link(Scalar mu) const {
    using std::log;
    return log_link() ? log(mu) : mu;
  }
  template <typename Scalar>
  Scalar inverse_link(Scalar eta) const {
    using std::exp;
    return log_link() ? exp(eta) : eta;
  }

  std::string_view name() const {
    switch (kind) {
      case FamilyKind::GaussianIdentity: return "gaussian";
      case FamilyKind::PoissonLog: return "poisson";
      case FamilyKind::QuasiPoissonLog: return "quasipoisson";
    }
    return "unknown";
  }

  friend constexpr bool operator==(FamilySpec a, FamilySpec b) { return a.kind == b.kind; }
};

inline FamilySpec family_from_name(std::string_view name) {
  if (name == "gaussian") return FamilySpec::gaussian();
  if (name == "poisson") return FamilySpec::poisson();
  if (name == "quasipoisson") return FamilySpec::quasi_poisson();
  throw InputError("unknown family '" + std::string(name) + "'");
}

/// Unit deviance summed over observations. Gaussian: sum of squares.
/// Poisson: 2 sum[y log(y/mu) - (y - mu)], with y log(y/mu) = 0 at y = 0.
template <typename DerivedY, typename DerivedMu>
typename DerivedY::Scalar deviance(const Eigen::MatrixBase<DerivedY>& y,
                                   const Eigen::MatrixBase<DerivedMu>& mu,
                                   const FamilySpec& family) {
  using Scalar = typename DerivedY::Scalar;
  if (y.size() != mu.size()) throw LengthMismatch("deviance: y and mu differ in length");
  if (!family.log_link()) return (y - mu).squaredNorm();
  Scalar dev(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const Scalar m = mu(i);
    if (!(m > Scalar(0))) throw InvalidMean("deviance: log-link mean must be positive");
    const Scalar yi = y(i);
    const Scalar ylog = yi > Scalar(0) ? yi * std::log(yi / m) : Scalar(0);
    dev += ylog - (yi - m);
  }
  return Scalar(2) * dev;
}

/// Log-likelihood up to the normalising term c(y, phi), which is dropped.
/// Gaussian uses phi = 1: -0.5 * sum (y - mu)^2. For the log families this is
/// sum[y log mu - mu], the Poisson log-likelihood without log(y!), which is
/// also the quasi-likelihood used for quasi-Poisson.
template <typename DerivedY, typename DerivedMu>
typename DerivedY::Scalar loglik(const Eigen::MatrixBase<DerivedY>& y,
                                 const Eigen::MatrixBase<DerivedMu>& mu,
                                 const FamilySpec& family) {
  using Scalar = typename DerivedY::Scalar;
  if (y.size() != mu.size()) throw LengthMismatch("loglik: y and mu differ in length");
  if (!family.log_link()) return Scalar(-0.5) * (y - mu).squaredNorm();
  Scalar ll(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const Scalar m = mu(i);
    if (!(m > Scalar(0))) throw InvalidMean("loglik: log-link mean must be positive");
    ll += (y(i) > Scalar(0) ? y(i) * std::log(m) : Scalar(0)) - m;
  }
  return ll;
}

/// Pearson X^2 = sum (y - mu)^2 / v(mu).
template <typename DerivedY, typename DerivedMu>
typename DerivedY::Scalar pearson_chi2(const Eigen::MatrixBase<DerivedY>& y,
                                       const Eigen::MatrixBase<DerivedMu>& mu,
                                       const FamilySpec& family) {
  if (!family.log_link()) return (y - mu).squaredNorm();
  return ((y - mu).array().square() / mu.array()).sum();
}

}  // namespace glmclust
