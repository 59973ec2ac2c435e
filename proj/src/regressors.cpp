#include "ebcf/regressors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "ebcf/crossfit.hpp"

namespace ebcf {

namespace {

void check_query_dim(Index query_dim, Index train_dim, const char* who) {
  if (query_dim != train_dim) {
    throw std::invalid_argument(std::string(who) + ": query dimension " +
                                std::to_string(query_dim) + " does not match training dimension " +
                                std::to_string(train_dim));
  }
}

}  // namespace

KnnRegressor::KnnRegressor(MatrixXd covariates, VectorXd targets, int k)
    : covariates_(std::move(covariates)), targets_(std::move(targets)), k_(k) {
  if (covariates_.rows() != targets_.size()) {
    throw std::invalid_argument("KnnRegressor: covariate rows and targets differ in length");
  }
  if (covariates_.rows() < 1) {
    throw std::invalid_argument("KnnRegressor: empty training set");
  }
  if (k_ < 1 || k_ > covariates_.rows()) {
    throw std::invalid_argument("KnnRegressor: k = " + std::to_string(k_) +
                                " outside [1, " + std::to_string(covariates_.rows()) + "]");
  }
}

VectorXd KnnRegressor::predict(const Eigen::Ref<const MatrixXd>& X) const {
  return predict_for_ks(X, {k_}).col(0);
}

MatrixXd KnnRegressor::predict_for_ks(const Eigen::Ref<const MatrixXd>& X,
                                      const std::vector<int>& ks) const {
  check_query_dim(X.cols(), covariates_.cols(), "KnnRegressor::predict");
  if (ks.empty()) throw std::invalid_argument("KnnRegressor: no neighbor counts given");
  const Index n_train = covariates_.rows();
  int k_top = 0;
  for (int k : ks) {
    if (k < 1 || k > n_train) {
      throw std::invalid_argument("KnnRegressor: k = " + std::to_string(k) +
                                  " outside [1, " + std::to_string(n_train) + "]");
    }
    k_top = std::max(k_top, k);
  }

  const Index n_query = X.rows();
  MatrixXd out(n_query, static_cast<Index>(ks.size()));
  const VectorXd train_sq = covariates_.rowwise().squaredNorm();

  // Query blocks keep the distance buffer small; ||q - t||^2 expands to
  // ||q||^2 - 2 q.t + ||t||^2 and the ||q||^2 term cancels in the ranking.
  constexpr Index kBlock = 256;
  std::vector<std::pair<double, Index>> order(static_cast<std::size_t>(n_train));
  MatrixXd cross;
  for (Index b0 = 0; b0 < n_query; b0 += kBlock) {
    const Index bn = std::min(kBlock, n_query - b0);
    cross.noalias() = X.middleRows(b0, bn) * covariates_.transpose();
    for (Index q = 0; q < bn; ++q) {
      for (Index t = 0; t < n_train; ++t) {
        order[static_cast<std::size_t>(t)] = {train_sq(t) - 2.0 * cross(q, t), t};
      }
      // Ties break toward the lower training index via the pair ordering.
      std::partial_sort(order.begin(), order.begin() + k_top, order.end());
      double running = 0.0;
      int have = 0;
      for (std::size_t j = 0; j < ks.size(); ++j) {
        const int k = ks[j];
        for (; have < k; ++have) running += targets_(order[static_cast<std::size_t>(have)].second);
        out(b0 + q, static_cast<Index>(j)) = running / static_cast<double>(k);
      }
    }
  }
  return out;
}

OlsRegressor::OlsRegressor(const Eigen::Ref<const MatrixXd>& covariates,
                           const Eigen::Ref<const VectorXd>& targets, bool intercept)
    : has_intercept_(intercept), dim_(covariates.cols()) {
  const Index n = covariates.rows();
  if (n != targets.size()) {
    throw std::invalid_argument("OlsRegressor: covariate rows and targets differ in length");
  }
  const Index p = dim_ + (intercept ? 1 : 0);
  if (n <= p) {
    throw std::invalid_argument("OlsRegressor: need more rows than coefficients (" +
                                std::to_string(n) + " <= " + std::to_string(p) + ")");
  }

  MatrixXd design(n, p);
  design.leftCols(dim_) = covariates;
  if (intercept) design.col(dim_).setOnes();

  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  const auto& r_diag = qr.matrixR().diagonal();
  const double top = std::abs(r_diag(0));
  for (Index i = 0; i < p; ++i) {
    if (std::abs(r_diag(i)) < 1e-10 * top) {
      const Index original = qr.colsPermutation().indices()(i);
      const std::string name = (intercept && original == dim_)
                                   ? std::string("intercept")
                                   : "x" + std::to_string(original);
      throw SingularDesignError("OlsRegressor: design is rank deficient in column " + name);
    }
  }

  const VectorXd beta = qr.solve(targets);
  coefficients_ = beta.head(dim_);
  intercept_term_ = intercept ? beta(dim_) : 0.0;
}

VectorXd OlsRegressor::predict(const Eigen::Ref<const MatrixXd>& X) const {
  check_query_dim(X.cols(), dim_, "OlsRegressor::predict");
  VectorXd out = X * coefficients_;
  if (has_intercept_) out.array() += intercept_term_;
  return out;
}

ExternalRegressor::ExternalRegressor(std::unordered_map<Index, double> predictions)
    : predictions_(std::move(predictions)) {
  if (predictions_.empty()) {
    throw std::invalid_argument("ExternalRegressor: empty prediction table");
  }
}

VectorXd ExternalRegressor::predict(const Eigen::Ref<const MatrixXd>& X) const {
  (void)X;
  throw std::invalid_argument(
      "ExternalRegressor: predictions are keyed by unit index; covariate-only queries "
      "are not supported");
}

VectorXd ExternalRegressor::predict(const Eigen::Ref<const MatrixXd>& X,
                                    const std::vector<Index>& indices) const {
  if (static_cast<Index>(indices.size()) != X.rows()) {
    throw std::invalid_argument("ExternalRegressor: one index per query row required");
  }
  VectorXd out(X.rows());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto it = predictions_.find(indices[i]);
    if (it == predictions_.end()) {
      throw std::invalid_argument("ExternalRegressor: no prediction for index " +
                                  std::to_string(indices[i]));
    }
    out(static_cast<Index>(i)) = it->second;
  }
  return out;
}

FunctionRegressor::FunctionRegressor(MeanFunction mean) : mean_(std::move(mean)) {
  if (!mean_) throw std::invalid_argument("FunctionRegressor: null function");
}

VectorXd FunctionRegressor::predict(const Eigen::Ref<const MatrixXd>& X) const {
  VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = mean_(X.row(i).transpose());
  return out;
}

std::shared_ptr<const Regressor> fit_backend(const BackendSpec& spec,
                                             const Eigen::Ref<const MatrixXd>& X,
                                             const Eigen::Ref<const VectorXd>& z,
                                             std::uint64_t seed) {
  switch (spec.kind) {
    case BackendKind::kKnn: {
      int k = spec.knn_k;
      if (!spec.knn_cv_ks.empty()) {
        k = cv_select_k(spec.knn_cv_ks, X, z, spec.cv_folds, seed).chosen_k;
      }
      k = std::min<int>(k, static_cast<int>(X.rows()));
      return std::make_shared<KnnRegressor>(X, z, k);
    }
    case BackendKind::kOls:
      return std::make_shared<OlsRegressor>(X, z, spec.ols_intercept);
    case BackendKind::kExternal:
      if (!spec.external_predictions) {
        throw std::invalid_argument("fit_backend: external backend needs a prediction table");
      }
      return std::make_shared<ExternalRegressor>(*spec.external_predictions);
  }
  throw std::invalid_argument("fit_backend: unknown backend kind");
}

CvSelection cv_select_k(const std::vector<int>& candidate_ks,
                        const Eigen::Ref<const MatrixXd>& X,
                        const Eigen::Ref<const VectorXd>& z, int n_folds,
                        std::uint64_t seed) {
  if (candidate_ks.empty()) {
    throw std::invalid_argument("cv_select_k: no candidates");
  }
  if (n_folds < 2) {
    throw std::invalid_argument("cv_select_k: need at least 2 folds");
  }
  const Index n = X.rows();
  const FoldAssignment folds = make_folds(n, n_folds, seed);
  const auto by_fold = folds.fold_indices();

  Index min_train = n;
  for (const auto& fold : by_fold) {
    min_train = std::min(min_train, n - static_cast<Index>(fold.size()));
  }

  CvSelection sel;
  sel.candidate_ks = candidate_ks;
  std::vector<int> usable;
  for (int k : candidate_ks) {
    if (k >= 1 && k <= min_train) {
      usable.push_back(k);
    } else {
      sel.skipped_ks.push_back(k);
    }
  }
  if (usable.empty()) {
    throw std::invalid_argument("cv_select_k: every candidate exceeds the training fold size " +
                                std::to_string(min_train));
  }
  std::sort(usable.begin(), usable.end());
  usable.erase(std::unique(usable.begin(), usable.end()), usable.end());

  std::vector<double> sq_error(usable.size(), 0.0);
  for (const auto& fold : by_fold) {
    const Index held = static_cast<Index>(fold.size());
    const Index n_train = n - held;
    MatrixXd X_train(n_train, X.cols());
    VectorXd z_train(n_train);
    MatrixXd X_test(held, X.cols());
    VectorXd z_test(held);
    std::vector<char> in_fold(static_cast<std::size_t>(n), 0);
    for (Index i : fold) in_fold[static_cast<std::size_t>(i)] = 1;
    Index ti = 0, qi = 0;
    for (Index i = 0; i < n; ++i) {
      if (in_fold[static_cast<std::size_t>(i)]) {
        X_test.row(qi) = X.row(i);
        z_test(qi++) = z(i);
      } else {
        X_train.row(ti) = X.row(i);
        z_train(ti++) = z(i);
      }
    }
    const KnnRegressor model(std::move(X_train), std::move(z_train),
                             std::min<int>(usable.back(), static_cast<int>(n_train)));
    const MatrixXd preds = model.predict_for_ks(X_test, usable);
    for (std::size_t j = 0; j < usable.size(); ++j) {
      sq_error[j] += (preds.col(static_cast<Index>(j)) - z_test).squaredNorm();
    }
  }

  double best = std::numeric_limits<double>::infinity();
  int best_k = usable.front();
  sel.cv_scores.assign(candidate_ks.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < usable.size(); ++j) {
    const double score = sq_error[j] / static_cast<double>(n);
    for (std::size_t c = 0; c < candidate_ks.size(); ++c) {
      if (candidate_ks[c] == usable[j]) sel.cv_scores[c] = score;
    }
    // Strict improvement over an ascending scan breaks ties to the smaller k.
    if (score < best) {
      best = score;
      best_k = usable[j];
    }
  }
  sel.chosen_k = best_k;
  return sel;
}

}  // namespace ebcf
