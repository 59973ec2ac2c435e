#pragma once

#include <cstdint>
#include <memory>

#include "ebcf/common.hpp"
#include "ebcf/regressors.hpp"
#include "ebcf/rng.hpp"

namespace ebcf {

/// Posterior-mean shrinkage: A/(sigma2+A) * z + sigma2/(sigma2+A) * m_x.
/// The result always lies between z and m_x; A = 0 returns m_x exactly.
double bayes_shrink(double m_x, double z, double prior_variance, double noise_variance);

/// Vector form with per-unit noise variances and one shared prior variance.
VectorXd bayes_shrink(const Eigen::Ref<const VectorXd>& m_x,
                      const Eigen::Ref<const VectorXd>& z, double prior_variance,
                      const Eigen::Ref<const VectorXd>& noise_variances);

/// Positive-part moment estimate of the prior variance from regression
/// residuals with a common noise variance: (mean of r_i^2 - sigma2)_+.
double moment_prior_variance(const Eigen::Ref<const VectorXd>& residuals,
                             double noise_variance);

/// Paired residuals r_i = z_i - m_hat(x_i) and noise variances sigma_i^2
/// for one held-out fold. Validates shape and positivity on construction.
class SureObjective {
 public:
  SureObjective(VectorXd residuals, VectorXd noise_variances);

  const VectorXd& residuals() const { return residuals_; }
  const VectorXd& noise_variances() const { return noise_variances_; }
  Index size() const { return residuals_.size(); }

  /// True when all noise variances agree to the given relative tolerance.
  bool homoskedastic(double rel_tol = 1e-12) const;

 private:
  VectorXd residuals_;
  VectorXd noise_variances_;
};

/// Unbiased risk estimate for the shrinkage rule with prior variance A:
/// (1/n) sum_i [ sigma_i^2 + sigma_i^4 r_i^2/(A+sigma_i^2)^2
///               - 2 sigma_i^4/(A+sigma_i^2) ].
/// May be negative; never clipped.
double sure_value(const SureObjective& objective, double prior_variance);

/// argmin over A >= 0 of sure_value. Equal variances take the closed-form
/// moment estimate; otherwise a log-spaced coarse grid plus golden-section
/// refinement over [0, max r_i^2] to absolute tolerance 1e-8 * (1 + A_max).
double minimize_sure(const SureObjective& objective);

/// The numerical (grid + golden section) path, usable on any variances.
/// minimize_sure routes to this in the heteroskedastic case.
double minimize_sure_numeric(const SureObjective& objective);

/// Risk-optimal prior variance for a fixed, possibly biased regression:
/// the true prior variance inflated by the regression's mean squared error.
double inflated_prior_variance(double regression_mse, double prior_variance);

/// A fitted denoiser: a regression handle plus a prior variance (clamped to
/// be nonnegative at construction).
class ShrinkageRule {
 public:
  ShrinkageRule(std::shared_ptr<const Regressor> regression, double prior_variance);

  double prior_variance() const { return prior_variance_; }
  const Regressor& regression() const { return *regression_; }

  double apply(const Eigen::Ref<const VectorXd>& x, double z, double noise_variance) const;
  VectorXd apply(const Eigen::Ref<const MatrixXd>& X,
                 const Eigen::Ref<const VectorXd>& z,
                 const Eigen::Ref<const VectorXd>& noise_variances) const;

 private:
  std::shared_ptr<const Regressor> regression_;
  double prior_variance_;
};

/// Monte Carlo estimate of a rule's excess risk over the oracle rule, with
/// its standard error; the total mean squared error comes along for free.
struct ExcessRiskValue {
  double value = 0.0;
  double mc_std_error = 0.0;
  double total_mse = 0.0;
  double total_mse_se = 0.0;
  std::int64_t n_mc = 0;
};

/// Draws a fresh covariate vector; defaults to scalar U[0,1] when empty.
using CovariateSampler = std::function<VectorXd(CounterRng&)>;

/// Estimates the excess risk of `rule` under the hierarchical model with
/// regression function true_m, prior variance and noise variance as given.
/// The replicate budget is split into fixed-size chunks with seed-derived
/// substreams, so results are bit-identical for any worker count.
ExcessRiskValue excess_risk_mc(const ShrinkageRule& rule, const MeanFunction& true_m,
                               double prior_variance, double noise_variance,
                               std::int64_t n_mc, std::uint64_t seed,
                               const CovariateSampler& covariates = {});

}  // namespace ebcf
