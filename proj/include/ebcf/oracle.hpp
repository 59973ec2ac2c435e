#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebcf/common.hpp"
#include "ebcf/regressors.hpp"
#include "ebcf/simulate.hpp"

namespace ebcf {

/// Equal-weight mixture of two Gaussians N(mean1, v) and N(mean2, v) used
/// as a prior in the numerical risk identities.
struct MixturePrior {
  double mean1 = 0.0;
  double mean2 = 0.0;
  double component_variance = 0.0;  // >= 0
};

/// Fisher information of the marginal density of Z when mu ~ prior and
/// Z | mu ~ N(mu, noise_variance). Adaptive quadrature of f'^2/f over the
/// effective support (12 marginal s.d. past the component means).
double fisher_information_marginal(const MixturePrior& prior, double noise_variance,
                                   double abs_tol = 1e-9);

/// Bayes risk via the Fisher-information identity sigma^2 (1 - sigma^2 I).
/// Always within [0, noise_variance] up to quadrature tolerance.
double bayes_risk_brown(const MixturePrior& prior, double noise_variance);

/// Excess of the mixture's Bayes risk over the single-Gaussian Bayes risk
/// with the same component variance. Nonnegative.
double mixture_regret(const MixturePrior& prior, double noise_variance);

/// Posterior mean E[mu | Z = z] under the mixture prior, in closed form.
double posterior_mean_mixture(const MixturePrior& prior, double noise_variance,
                              double z);

/// Same posterior mean by Gauss-Hermite quadrature (Golub-Welsch nodes),
/// kept as an independent cross-check of the closed form.
double posterior_mean_mixture_quadrature(const MixturePrior& prior,
                                         double noise_variance, double z,
                                         int nodes = 201);

/// Gauss-Hermite rule for integrals of f(t) exp(-t^2).
struct GaussHermiteRule {
  VectorXd nodes;
  VectorXd weights;
};

GaussHermiteRule gauss_hermite(int n);

enum class EstimatorKind { kUnbiased, kRegressionOnly, kSureGrandMean, kEbcf };

std::string estimator_name(EstimatorKind kind);

struct EstimatorRisk {
  std::string name;
  double mse = 0.0;
  double rmse = 0.0;
  double std_error = 0.0;  // sample s.d. of replicate MSEs / sqrt(replicates)
  int replicates = 0;      // successful replicates
  int failures = 0;
};

struct RiskReport {
  Index n = 0;
  double prior_variance = 0.0;
  double sigma = 0.0;
  int replicates = 0;
  std::vector<EstimatorRisk> estimators;
  std::vector<std::uint64_t> dataset_hashes;  // one per replicate
};

/// Paired Monte Carlo comparison: every estimator sees the same replicate
/// draws. A fit failure is recorded against that estimator's cell instead of
/// aborting the sweep. Replicates run in parallel over seed substreams.
RiskReport compare_estimators(const HierarchicalSpec& scenario, Index n,
                              int replicates, const std::vector<EstimatorKind>& set,
                              std::uint64_t seed, const BackendSpec& backend,
                              int n_folds = 5);

/// CSV rows `estimator,n,A,sigma,mse,rmse,se,replicates`. With header by
/// default; pass false when concatenating sweeps.
std::string risk_report_csv(const RiskReport& report, bool header = true);

/// Human-readable table of the same numbers.
std::string risk_report_table(const RiskReport& report);

}  // namespace ebcf
