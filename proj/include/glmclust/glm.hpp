#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "glmclust/errors.hpp"
#include "glmclust/family.hpp"
#include "glmclust/model.hpp"

namespace glmclust {

struct IrlsControl {
  double tolerance = 1e-10;
  int max_iterations = 100;
  /// Relative pivot threshold below which a design column counts as aliased.
  double rank_threshold = 1e-10;
  int max_step_halvings = 30;
};

namespace detail {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Eigen::ColPivHouseholderQR<Mat<Scalar>> full_rank_qr(const Mat<Scalar>& a, const IrlsControl& ctl,
                                                      const char* what) {
  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(a.rows(), a.cols());
  qr.setThreshold(Scalar(ctl.rank_threshold));
  qr.compute(a);
  if (qr.rank() < a.cols()) throw SingularDesign(std::string(what) + ": design is rank deficient");
  return qr;
}

// (A'A)^{-1} from a column-pivoted QR of A.
template <typename Scalar>
Mat<Scalar> unscaled_covariance(const Eigen::ColPivHouseholderQR<Mat<Scalar>>& qr) {
  const auto p = qr.cols();
  Mat<Scalar> r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  Mat<Scalar> rinv = r.template triangularView<Eigen::Upper>().solve(Mat<Scalar>::Identity(p, p));
  Mat<Scalar> inner = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation();
  return perm * inner * perm.transpose();
}

template <typename Scalar>
bool converged(Scalar dev, Scalar dev_old, const IrlsControl& ctl) {
  using std::abs;
  return abs(dev - dev_old) / (abs(dev) + Scalar(0.1)) < Scalar(ctl.tolerance);
}

// A rise in deviance beyond rounding noise; smaller rises near the optimum
// must not halve a Newton step.
template <typename Scalar>
bool increased(Scalar dev, Scalar dev_old, const IrlsControl& ctl) {
  using std::abs;
  return !(dev - dev_old <= Scalar(ctl.tolerance) * (abs(dev_old) + Scalar(0.1)));
}

template <typename Scalar>
Vec<Scalar> start_eta(const Vec<Scalar>& y, const FamilySpec& family) {
  if (!family.log_link()) return y;
  return (y.array() + Scalar(0.1)).log().matrix();
}

template <typename Scalar>
Vec<Scalar> inverse_link(const Vec<Scalar>& eta, const FamilySpec& family) {
  if (!family.log_link()) return eta;
  return eta.array().exp().matrix();
}

}  // namespace detail

/// IRWLS fit of a single GLM. Gaussian-identity is solved in one
/// least-squares step; the log families iterate from mu = y + 0.1 with step
/// halving whenever the deviance would increase.
template <typename DerivedY, typename DerivedX>
BasicFitResult<typename DerivedY::Scalar> fit_glm(const Eigen::MatrixBase<DerivedY>& y_in,
                                                  const Eigen::MatrixBase<DerivedX>& x_in,
                                                  const FamilySpec& family,
                                                  const IrlsControl& ctl = {}) {
  using Scalar = typename DerivedY::Scalar;
  using Vector = detail::Vec<Scalar>;
  using Matrix = detail::Mat<Scalar>;

  const Vector y = y_in;
  const Matrix x = x_in;
  if (x.rows() != y.size()) throw LengthMismatch("fit_glm: X rows differ from length of y");
  validate_response(y, family);

  BasicFitResult<Scalar> out;
  out.loglik_is_quasi = family.kind == FamilyKind::QuasiPoissonLog;
  out.residual_df = x.rows() - x.cols();

  if (!family.log_link()) {
    auto qr = detail::full_rank_qr<Scalar>(x, ctl, "fit_glm");
    out.coefficients = qr.solve(y);
    out.fitted_means = x * out.coefficients;
    out.deviance = deviance(y, out.fitted_means, family);
    out.deviance_trace.push_back(out.deviance);
    out.iterations = 1;
    out.converged = true;
    out.unscaled_covariance = detail::unscaled_covariance(qr);
  } else {
    Vector eta = detail::start_eta(y, family);
    Vector mu = detail::inverse_link(eta, family);
    Vector beta;
    Scalar dev_old = std::numeric_limits<Scalar>::infinity();
    for (int iter = 1; iter <= ctl.max_iterations; ++iter) {
      const Vector sw = mu.array().sqrt();
      const Vector z = eta.array() + (y - mu).array() / mu.array();
      auto qr = detail::full_rank_qr<Scalar>(sw.asDiagonal() * x, ctl, "fit_glm");
      Vector beta_new = qr.solve(Vector(sw.asDiagonal() * z));
      Vector eta_new = x * beta_new;
      Vector mu_new = detail::inverse_link(eta_new, family);
      Scalar dev = deviance(y, mu_new, family);
      for (int h = 0; h < ctl.max_step_halvings && iter > 1 && detail::increased(dev, dev_old, ctl); ++h) {
        beta_new = (beta_new + beta) / Scalar(2);
        eta_new = x * beta_new;
        mu_new = detail::inverse_link(eta_new, family);
        dev = deviance(y, mu_new, family);
      }
      beta = std::move(beta_new);
      eta = std::move(eta_new);
      mu = std::move(mu_new);
      out.deviance_trace.push_back(dev);
      out.iterations = iter;
      out.unscaled_covariance = detail::unscaled_covariance(qr);
      // One more step once the criterion is met: the deviance is flat at the
      // optimum but the Pearson statistic is not.
      if (iter > 1 && detail::converged(dev, dev_old, ctl)) {
        if (out.converged) {
          dev_old = dev;
          break;
        }
        out.converged = true;
      } else {
        out.converged = false;
      }
      dev_old = dev;
    }
    out.coefficients = beta;
    out.fitted_means = mu;
    out.deviance = dev_old;
  }
  out.loglik = loglik(y, out.fitted_means, family);
  out.pearson = pearson_chi2(y, out.fitted_means, family);
  return out;
}

/// Fit of a group of objects sharing one clustered block: each member keeps
/// its own x1 coefficients. The free blocks are eliminated member by member
/// (each member's weighted x2 and working response are projected off its
/// weighted x1), leaving one stacked least-squares problem for the shared
/// coefficients.
template <typename Scalar>
struct BasicPooledFit {
  std::vector<detail::Vec<Scalar>> free_coefficients;
  detail::Vec<Scalar> shared_coefficients;
  std::vector<detail::Vec<Scalar>> fitted_means;
  Scalar deviance = 0;
  Scalar pearson = 0;
  Eigen::Index n_observations = 0;
  Eigen::Index n_coefficients = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<Scalar> deviance_trace;
  detail::Mat<Scalar> shared_unscaled_covariance;

  Eigen::Index residual_df() const { return n_observations - n_coefficients; }
};

using PooledFit = BasicPooledFit<double>;

template <typename Scalar>
BasicPooledFit<Scalar> pooled_fit(std::span<const BasicModelObject<Scalar>* const> members,
                                  const FamilySpec& family, const IrlsControl& ctl = {}) {
  using Vector = detail::Vec<Scalar>;
  using Matrix = detail::Mat<Scalar>;
  using QR = Eigen::ColPivHouseholderQR<Matrix>;
  if (members.empty()) throw EmptyList("pooled_fit: no members");

  const std::size_t m = members.size();
  const Eigen::Index q1 = members.front()->q1();
  const Eigen::Index q2 = members.front()->q2();
  Eigen::Index total = 0;
  for (const auto* o : members) {
    if (o->q1() != q1 || o->q2() != q2) throw InputError("pooled_fit: members disagree on q1/q2");
    total += o->n();
  }

  BasicPooledFit<Scalar> out;
  out.n_observations = total;
  out.n_coefficients = static_cast<Eigen::Index>(m) * q1 + q2;

  std::vector<Vector> eta(m), eta_old(m), mu(m);
  for (std::size_t i = 0; i < m; ++i) {
    eta[i] = detail::start_eta(members[i]->y, family);
    mu[i] = detail::inverse_link(eta[i], family);
  }
  out.free_coefficients.assign(m, Vector::Zero(q1));
  std::vector<Vector> beta1_old = out.free_coefficients;
  Vector beta2_old;

  Matrix stacked_x2(total, q2);
  Vector stacked_z(total);
  std::vector<QR> member_qr(m);
  std::vector<Vector> sw(m), swz(m);

  const bool single_step = !family.log_link();
  Scalar dev_old = std::numeric_limits<Scalar>::infinity();
  for (int iter = 1; iter <= ctl.max_iterations; ++iter) {
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& o = *members[i];
      if (family.log_link()) {
        sw[i] = mu[i].array().sqrt();
        swz[i] = sw[i].array() * (eta[i].array() + (o.y - mu[i]).array() / mu[i].array());
      } else {
        sw[i] = Vector::Ones(o.n());
        swz[i] = o.y;
      }
      Matrix b = sw[i].asDiagonal() * o.x2;
      Vector c = swz[i];
      if (q1 > 0) {
        const Matrix a = sw[i].asDiagonal() * o.x1;
        member_qr[i] = detail::full_rank_qr<Scalar>(a, ctl, "pooled_fit");
        b -= a * member_qr[i].solve(b);
        c -= a * member_qr[i].solve(c);
      }
      stacked_x2.middleRows(row, o.n()) = b;
      stacked_z.segment(row, o.n()) = c;
      row += o.n();
    }
    auto qr2 = detail::full_rank_qr<Scalar>(stacked_x2, ctl, "pooled_fit");
    Vector beta2 = qr2.solve(stacked_z);
    std::vector<Vector> beta1(m);
    std::vector<Vector> eta_new(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& o = *members[i];
      if (q1 > 0) {
        const Vector rhs = swz[i] - sw[i].asDiagonal() * (o.x2 * beta2);
        beta1[i] = member_qr[i].solve(rhs);
        eta_new[i] = o.x1 * beta1[i] + o.x2 * beta2;
      } else {
        beta1[i] = Vector(0);
        eta_new[i] = o.x2 * beta2;
      }
    }

    auto evaluate = [&](const std::vector<Vector>& e, std::vector<Vector>& mu_out) {
      Scalar dev(0);
      for (std::size_t i = 0; i < m; ++i) {
        mu_out[i] = detail::inverse_link(e[i], family);
        dev += glmclust::deviance(members[i]->y, mu_out[i], family);
      }
      return dev;
    };
    std::vector<Vector> mu_new(m);
    Scalar dev = evaluate(eta_new, mu_new);
    for (int h = 0; h < ctl.max_step_halvings && iter > 1 && detail::increased(dev, dev_old, ctl); ++h) {
      beta2 = (beta2 + beta2_old) / Scalar(2);
      for (std::size_t i = 0; i < m; ++i) {
        beta1[i] = (beta1[i] + beta1_old[i]) / Scalar(2);
        eta_new[i] = (eta_new[i] + eta[i]) / Scalar(2);
      }
      dev = evaluate(eta_new, mu_new);
    }

    eta = std::move(eta_new);
    mu = std::move(mu_new);
    beta1_old = beta1;
    beta2_old = beta2;
    out.free_coefficients = std::move(beta1);
    out.shared_coefficients = std::move(beta2);
    out.deviance_trace.push_back(dev);
    out.iterations = iter;
    out.shared_unscaled_covariance = detail::unscaled_covariance(qr2);
    const bool met = iter > 1 && detail::converged(dev, dev_old, ctl);
    const bool done = single_step || (met && out.converged);
    out.converged = single_step || met;
    dev_old = dev;
    if (done) break;
  }

  out.deviance = dev_old;
  out.pearson = 0;
  for (std::size_t i = 0; i < m; ++i) out.pearson += pearson_chi2(members[i]->y, mu[i], family);
  out.fitted_means = std::move(mu);
  return out;
}

/// Joint fit of the clustered model: per-object free coefficients plus one
/// shared block per cluster. Coefficients are laid out as
/// [free_0, ..., free_{N-1}, shared_0, ..., shared_{k-1}].
template <typename Scalar>
struct BasicClusteredFit : BasicFitResult<Scalar> {
  Eigen::Index q1 = 0;
  Eigen::Index q2 = 0;
  int n_objects = 0;
  int k = 0;
  std::vector<detail::Mat<Scalar>> shared_unscaled_covariance;

  auto free_block(int i) const { return this->coefficients.segment(i * q1, q1); }
  auto shared_block(int s) const {
    return this->coefficients.segment(static_cast<Eigen::Index>(n_objects) * q1 + s * q2, q2);
  }
};

using ClusteredFit = BasicClusteredFit<double>;

template <typename Scalar>
BasicClusteredFit<Scalar> fit_clustered(const BasicClusteredDesign<Scalar>& design,
                                        const FamilySpec& family, const IrlsControl& ctl = {}) {
  design.validate();
  for (const auto& o : design.objects) validate(o, family);

  const auto groups = design.members();
  const int n_obj = static_cast<int>(design.objects.size());
  BasicClusteredFit<Scalar> out;
  out.q1 = design.q1();
  out.q2 = design.q2();
  out.n_objects = n_obj;
  out.k = design.k;
  out.loglik_is_quasi = family.kind == FamilyKind::QuasiPoissonLog;
  out.coefficients.resize(design.n_coefficients());
  out.residual_df = design.n_observations() - design.n_coefficients();
  out.converged = true;

  std::vector<Eigen::Index> offset(design.objects.size() + 1, 0);
  for (std::size_t i = 0; i < design.objects.size(); ++i)
    offset[i + 1] = offset[i] + design.objects[i].n();
  out.fitted_means.resize(offset.back());

  std::vector<std::vector<Scalar>> traces;
  for (int s = 0; s < design.k; ++s) {
    std::vector<const BasicModelObject<Scalar>*> ptrs;
    for (int i : groups[static_cast<std::size_t>(s)]) ptrs.push_back(&design.objects[static_cast<std::size_t>(i)]);
    auto pf = pooled_fit<Scalar>(ptrs, family, ctl);
    for (std::size_t j = 0; j < ptrs.size(); ++j) {
      const int i = groups[static_cast<std::size_t>(s)][j];
      out.coefficients.segment(i * out.q1, out.q1) = pf.free_coefficients[j];
      out.fitted_means.segment(offset[static_cast<std::size_t>(i)], ptrs[j]->n()) = pf.fitted_means[j];
    }
    out.coefficients.segment(static_cast<Eigen::Index>(n_obj) * out.q1 + s * out.q2, out.q2) =
        pf.shared_coefficients;
    out.deviance += pf.deviance;
    out.pearson += pf.pearson;
    out.iterations = std::max(out.iterations, pf.iterations);
    out.converged = out.converged && pf.converged;
    out.shared_unscaled_covariance.push_back(std::move(pf.shared_unscaled_covariance));
    traces.push_back(std::move(pf.deviance_trace));
  }
  // Per-cluster traces summed position-wise, finished clusters holding their last value.
  for (int it = 0; it < out.iterations; ++it) {
    Scalar total(0);
    for (const auto& t : traces) total += t[std::min<std::size_t>(static_cast<std::size_t>(it), t.size() - 1)];
    out.deviance_trace.push_back(total);
  }

  out.loglik = 0;
  for (std::size_t i = 0; i < design.objects.size(); ++i)
    out.loglik += glmclust::loglik(design.objects[i].y,
                                   out.fitted_means.segment(offset[i], design.objects[i].n()), family);
  return out;
}

/// Moment estimate of the dispersion: Pearson X^2 over residual df.
template <typename Scalar>
Scalar estimate_dispersion(Scalar pearson, Eigen::Index residual_df) {
  if (residual_df <= 0) throw ZeroResidualDf("dispersion needs positive residual degrees of freedom");
  return pearson / Scalar(residual_df);
}

template <typename Scalar>
Scalar estimate_dispersion(const BasicClusteredDesign<Scalar>& design, const BasicFitResult<Scalar>& fit,
                           const FamilySpec& family) {
  if (!family.has_dispersion()) throw InputError("family has no dispersion parameter");
  Eigen::Index row = 0;
  Scalar x2(0);
  for (const auto& o : design.objects) {
    x2 += pearson_chi2(o.y, fit.fitted_means.segment(row, o.n()), family);
    row += o.n();
  }
  return estimate_dispersion(x2, fit.residual_df);
}

}  // namespace glmclust
