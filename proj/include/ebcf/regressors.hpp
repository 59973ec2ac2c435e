#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "ebcf/common.hpp"

namespace ebcf {

/// Fit/predict contract for the regression m(x) = E[Z | X = x].
/// Fitted models are immutable; predict is safe to call concurrently.
class Regressor {
 public:
  virtual ~Regressor() = default;

  /// Predictions for the rows of X.
  virtual VectorXd predict(const Eigen::Ref<const MatrixXd>& X) const = 0;

  /// Index-aware prediction. Covariate-based models ignore the indices;
  /// the external-predictions adapter is keyed by them.
  virtual VectorXd predict(const Eigen::Ref<const MatrixXd>& X,
                           const std::vector<Index>& indices) const {
    (void)indices;
    return predict(X);
  }

  double predict_one(const Eigen::Ref<const VectorXd>& x) const {
    return predict(x.transpose())(0);
  }
};

/// k-nearest-neighbor regression under Euclidean distance. Distance ties
/// break toward the lower training index, so predictions are deterministic.
class KnnRegressor final : public Regressor {
 public:
  KnnRegressor(MatrixXd covariates, VectorXd targets, int k);

  VectorXd predict(const Eigen::Ref<const MatrixXd>& X) const override;

  /// Predictions for several neighbor counts at once; column j corresponds
  /// to ks[j]. Shares one neighbor-selection pass, which is what makes
  /// cross-validated tuning affordable.
  MatrixXd predict_for_ks(const Eigen::Ref<const MatrixXd>& X,
                          const std::vector<int>& ks) const;

  int k() const { return k_; }
  Index train_size() const { return covariates_.rows(); }

 private:
  MatrixXd covariates_;
  VectorXd targets_;
  int k_;
};

/// Ordinary least squares through a column-pivoted QR factorization.
/// A rank-deficient design is rejected, naming the offending column.
class OlsRegressor final : public Regressor {
 public:
  OlsRegressor(const Eigen::Ref<const MatrixXd>& covariates,
               const Eigen::Ref<const VectorXd>& targets, bool intercept);

  VectorXd predict(const Eigen::Ref<const MatrixXd>& X) const override;

  const VectorXd& coefficients() const { return coefficients_; }
  double intercept_term() const { return intercept_term_; }
  bool has_intercept() const { return has_intercept_; }

 private:
  VectorXd coefficients_;
  double intercept_term_ = 0.0;
  bool has_intercept_;
  Index dim_;
};

/// Adapter for out-of-fold predictions produced by a black-box model.
/// Keyed by unit index rather than covariates; querying a missing index
/// is an error that names the index.
class ExternalRegressor final : public Regressor {
 public:
  explicit ExternalRegressor(std::unordered_map<Index, double> predictions);

  VectorXd predict(const Eigen::Ref<const MatrixXd>& X) const override;
  VectorXd predict(const Eigen::Ref<const MatrixXd>& X,
                   const std::vector<Index>& indices) const override;

  Index size() const { return static_cast<Index>(predictions_.size()); }

 private:
  std::unordered_map<Index, double> predictions_;
};

/// Wraps a plain function as a regression model; used for oracle rules
/// and synthetic-risk studies where m is known.
class FunctionRegressor final : public Regressor {
 public:
  explicit FunctionRegressor(MeanFunction mean);

  VectorXd predict(const Eigen::Ref<const MatrixXd>& X) const override;

 private:
  MeanFunction mean_;
};

enum class BackendKind { kKnn, kOls, kExternal };

/// Declarative model choice consumed by the cross-fitting driver and CLI.
struct BackendSpec {
  BackendKind kind = BackendKind::kKnn;
  int knn_k = 10;
  std::vector<int> knn_cv_ks;  // nonempty: pick k by cross-validation at fit time
  int cv_folds = 5;
  bool ols_intercept = true;
  std::shared_ptr<const std::unordered_map<Index, double>> external_predictions;
};

/// Fits the requested backend on (X, z). The seed feeds fold creation for
/// cross-validated k selection and is otherwise unused.
std::shared_ptr<const Regressor> fit_backend(const BackendSpec& spec,
                                             const Eigen::Ref<const MatrixXd>& X,
                                             const Eigen::Ref<const VectorXd>& z,
                                             std::uint64_t seed);

/// Result of cross-validated neighbor-count selection. Scores are mean
/// held-out squared errors; candidates too large for the training folds are
/// skipped (recorded, score NaN) rather than failing the selection.
struct CvSelection {
  std::vector<int> candidate_ks;
  std::vector<double> cv_scores;  // aligned with candidate_ks
  std::vector<int> skipped_ks;
  int chosen_k = 0;
};

CvSelection cv_select_k(const std::vector<int>& candidate_ks,
                        const Eigen::Ref<const MatrixXd>& X,
                        const Eigen::Ref<const VectorXd>& z, int n_folds,
                        std::uint64_t seed);

}  // namespace ebcf
