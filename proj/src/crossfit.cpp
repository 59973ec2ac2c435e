#include "ebcf/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ebcf/rng.hpp"
#include "ebcf/shrinkage.hpp"

namespace ebcf {

std::vector<std::vector<Index>> FoldAssignment::fold_indices() const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n_folds));
  for (Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])].push_back(i);
  }
  return out;
}

FoldAssignment make_folds(Index n, int n_folds, std::uint64_t seed) {
  if (n_folds < 2 || static_cast<Index>(n_folds) > n) {
    throw std::invalid_argument("make_folds: fold count " + std::to_string(n_folds) +
                                " outside [2, " + std::to_string(n) + "]");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  CounterRng rng = CounterRng(seed).substream(0x666f6c64);  // fold stream
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  FoldAssignment folds;
  folds.n = n;
  folds.n_folds = n_folds;
  folds.assignment.resize(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) {
    folds.assignment[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos)])] =
        static_cast<int>(pos % n_folds);
  }
  return folds;
}

EbcfFit ebcf_fit(const Eigen::Ref<const MatrixXd>& X,
                 const Eigen::Ref<const VectorXd>& z,
                 const Eigen::Ref<const VectorXd>& sigma, const BackendSpec& backend,
                 int n_folds, std::uint64_t seed, const std::vector<Index>& unit_ids) {
  const Index n = z.size();
  if (X.rows() != n || sigma.size() != n) {
    throw std::invalid_argument("ebcf_fit: X, z and sigma must agree in length");
  }
  if (!unit_ids.empty() && static_cast<Index>(unit_ids.size()) != n) {
    throw std::invalid_argument("ebcf_fit: unit_ids must be empty or length n");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(sigma(i) > 0.0) || !std::isfinite(sigma(i))) {
      throw std::invalid_argument("ebcf_fit: sigma at position " + std::to_string(i) +
                                  " is not positive");
    }
  }
  if (n < 2 * static_cast<Index>(n_folds)) {
    throw std::invalid_argument("ebcf_fit: need n >= 2 * folds, got n = " +
                                std::to_string(n) + " with " + std::to_string(n_folds) +
                                " folds");
  }

  EbcfFit fit;
  fit.folds = make_folds(n, n_folds, seed);
  fit.estimates.resize(n);
  fit.m_hat.resize(n);
  fit.fold_prior_variance.resize(static_cast<std::size_t>(n_folds));
  fit.fold_mean_sq_residual.resize(static_cast<std::size_t>(n_folds));
  fit.fold_knn_k.assign(static_cast<std::size_t>(n_folds), 0);
  fit.fold_models.resize(static_cast<std::size_t>(n_folds));

  const auto by_fold = fit.folds.fold_indices();
  for (int f = 0; f < n_folds; ++f) {
    const auto& held = by_fold[static_cast<std::size_t>(f)];
    const Index n_held = static_cast<Index>(held.size());
    const Index n_train = n - n_held;
    if (n_held < 1 || n_train < 1) {
      throw std::invalid_argument("ebcf_fit: fold " + std::to_string(f) +
                                  " too small to form residuals");
    }

    MatrixXd X_train(n_train, X.cols());
    VectorXd z_train(n_train);
    std::vector<char> in_fold(static_cast<std::size_t>(n), 0);
    for (Index i : held) in_fold[static_cast<std::size_t>(i)] = 1;
    Index t = 0;
    for (Index i = 0; i < n; ++i) {
      if (!in_fold[static_cast<std::size_t>(i)]) {
        X_train.row(t) = X.row(i);
        z_train(t++) = z(i);
      }
    }

    auto model = fit_backend(backend, X_train, z_train,
                             CounterRng(seed).substream(0x6376, static_cast<std::uint64_t>(f))
                                 .next_u64());
    if (backend.kind == BackendKind::kKnn) {
      fit.fold_knn_k[static_cast<std::size_t>(f)] =
          static_cast<const KnnRegressor&>(*model).k();
    }

    MatrixXd X_held(n_held, X.cols());
    VectorXd z_held(n_held);
    VectorXd var_held(n_held);
    std::vector<Index> held_ids(held.size());
    for (std::size_t q = 0; q < held.size(); ++q) {
      held_ids[q] = unit_ids.empty() ? held[q] : unit_ids[static_cast<std::size_t>(held[q])];
    }
    for (Index q = 0; q < n_held; ++q) {
      X_held.row(q) = X.row(held[static_cast<std::size_t>(q)]);
      z_held(q) = z(held[static_cast<std::size_t>(q)]);
      const double s = sigma(held[static_cast<std::size_t>(q)]);
      var_held(q) = s * s;
    }

    const VectorXd m_held = model->predict(X_held, held_ids);
    const VectorXd residuals = z_held - m_held;
    const SureObjective objective(residuals, var_held);
    const double a_hat = minimize_sure(objective);

    fit.fold_models[static_cast<std::size_t>(f)] = model;
    fit.fold_prior_variance[static_cast<std::size_t>(f)] = a_hat;
    fit.fold_mean_sq_residual[static_cast<std::size_t>(f)] =
        residuals.squaredNorm() / static_cast<double>(n_held);

    const VectorXd shrunk = bayes_shrink(m_held, z_held, a_hat, var_held);
    for (Index q = 0; q < n_held; ++q) {
      fit.m_hat(held[static_cast<std::size_t>(q)]) = m_held(q);
      fit.estimates(held[static_cast<std::size_t>(q)]) = shrunk(q);
    }
  }
  return fit;
}

VectorXd sure_grand_mean_fit(const Eigen::Ref<const VectorXd>& z,
                             const Eigen::Ref<const VectorXd>& sigma) {
  const Index n = z.size();
  if (n < 2) throw std::invalid_argument("sure_grand_mean_fit: need at least 2 units");
  if (sigma.size() != n) {
    throw std::invalid_argument("sure_grand_mean_fit: z and sigma must agree in length");
  }
  const double grand_mean = z.mean();
  const VectorXd residuals = z.array() - grand_mean;
  const VectorXd variances = sigma.array().square();
  const double a_hat = minimize_sure(SureObjective(residuals, variances));
  return bayes_shrink(VectorXd::Constant(n, grand_mean), z, a_hat, variances);
}

}  // namespace ebcf
