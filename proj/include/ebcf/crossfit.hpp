#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ebcf/common.hpp"
#include "ebcf/regressors.hpp"

namespace ebcf {

/// Balanced random partition of {0, ..., n-1}; fold sizes differ by at most
/// one and the assignment is a deterministic function of (n, n_folds, seed).
struct FoldAssignment {
  Index n = 0;
  int n_folds = 0;
  std::vector<int> assignment;  // length n, values in [0, n_folds)

  std::vector<std::vector<Index>> fold_indices() const;
};

FoldAssignment make_folds(Index n, int n_folds, std::uint64_t seed);

/// Cross-fitted empirical Bayes fit. Unit i's estimate combines a regression
/// trained without unit i's fold and a prior variance estimated from that
/// fold's own residuals.
struct EbcfFit {
  VectorXd estimates;  // length n
  VectorXd m_hat;      // out-of-fold regression predictions, length n
  FoldAssignment folds;
  std::vector<double> fold_prior_variance;
  std::vector<double> fold_mean_sq_residual;
  std::vector<int> fold_knn_k;  // chosen neighbor count per fold (kNN backend)
  std::vector<std::shared_ptr<const Regressor>> fold_models;

  /// Prior variance of the fold that held out unit i.
  double prior_variance_for(Index i) const {
    return fold_prior_variance[static_cast<std::size_t>(folds.assignment[i])];
  }
};

/// Fits the cross-fitted shrinkage estimator: for each fold, fit the backend
/// on the complement, estimate the prior variance from the fold's residuals
/// by SURE minimization, and shrink the fold's observations. `unit_ids` keys
/// the external-predictions backend; empty means row order.
EbcfFit ebcf_fit(const Eigen::Ref<const MatrixXd>& X,
                 const Eigen::Ref<const VectorXd>& z,
                 const Eigen::Ref<const VectorXd>& sigma, const BackendSpec& backend,
                 int n_folds, std::uint64_t seed,
                 const std::vector<Index>& unit_ids = {});

/// Covariate-free baseline: shrink every observation toward the in-sample
/// grand mean, with the prior variance chosen by SURE on the residuals.
VectorXd sure_grand_mean_fit(const Eigen::Ref<const VectorXd>& z,
                             const Eigen::Ref<const VectorXd>& sigma);

}  // namespace ebcf
