#include "ebcf/shrinkage.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ebcf/parallel.hpp"

namespace ebcf {

double bayes_shrink(double m_x, double z, double prior_variance, double noise_variance) {
  if (!std::isfinite(m_x) || !std::isfinite(z)) {
    throw std::invalid_argument("bayes_shrink: non-finite input");
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("bayes_shrink: noise variance must be positive, got " +
                                std::to_string(noise_variance));
  }
  if (!(prior_variance >= 0.0)) {
    throw std::invalid_argument("bayes_shrink: prior variance must be nonnegative, got " +
                                std::to_string(prior_variance));
  }
  const double w = prior_variance / (prior_variance + noise_variance);
  return w * z + (1.0 - w) * m_x;
}

VectorXd bayes_shrink(const Eigen::Ref<const VectorXd>& m_x,
                      const Eigen::Ref<const VectorXd>& z, double prior_variance,
                      const Eigen::Ref<const VectorXd>& noise_variances) {
  if (m_x.size() != z.size() || z.size() != noise_variances.size()) {
    throw std::invalid_argument("bayes_shrink: size mismatch");
  }
  VectorXd out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    out(i) = bayes_shrink(m_x(i), z(i), prior_variance, noise_variances(i));
  }
  return out;
}

double moment_prior_variance(const Eigen::Ref<const VectorXd>& residuals,
                             double noise_variance) {
  if (residuals.size() == 0) {
    throw std::invalid_argument("moment_prior_variance: empty residual vector");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument(
        "moment_prior_variance: noise variance must be positive, got " +
        std::to_string(noise_variance));
  }
  const double mean_sq = residuals.squaredNorm() / static_cast<double>(residuals.size());
  return std::max(mean_sq - noise_variance, 0.0);
}

SureObjective::SureObjective(VectorXd residuals, VectorXd noise_variances)
    : residuals_(std::move(residuals)), noise_variances_(std::move(noise_variances)) {
  if (residuals_.size() == 0) {
    throw std::invalid_argument("SureObjective: needs at least one residual");
  }
  if (residuals_.size() != noise_variances_.size()) {
    throw std::invalid_argument("SureObjective: residuals and noise variances differ in length");
  }
  for (Index i = 0; i < noise_variances_.size(); ++i) {
    if (!(noise_variances_(i) > 0.0) || !std::isfinite(noise_variances_(i))) {
      throw std::invalid_argument("SureObjective: noise variance at position " +
                                  std::to_string(i) + " is not positive");
    }
    if (!std::isfinite(residuals_(i))) {
      throw std::invalid_argument("SureObjective: residual at position " +
                                  std::to_string(i) + " is not finite");
    }
  }
}

bool SureObjective::homoskedastic(double rel_tol) const {
  const double lo = noise_variances_.minCoeff();
  const double hi = noise_variances_.maxCoeff();
  return hi - lo <= rel_tol * hi;
}

double sure_value(const SureObjective& objective, double prior_variance) {
  if (!(prior_variance >= 0.0)) {
    throw std::invalid_argument("sure_value: prior variance must be nonnegative, got " +
                                std::to_string(prior_variance));
  }
  const VectorXd& r = objective.residuals();
  const VectorXd& v = objective.noise_variances();
  double acc = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    const double denom = prior_variance + v(i);
    const double v2 = v(i) * v(i);
    acc += v(i) + v2 * r(i) * r(i) / (denom * denom) - 2.0 * v2 / denom;
  }
  return acc / static_cast<double>(r.size());
}

namespace {

// Golden-section minimization of f over [lo, hi] to absolute x-tolerance.
template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double minimize_sure_numeric(const SureObjective& objective) {
  const VectorXd& r = objective.residuals();
  const double a_max = r.array().square().maxCoeff();
  if (a_max == 0.0) return 0.0;  // zero residuals force full shrinkage

  auto f = [&](double a) { return sure_value(objective, a); };

  // Coarse log-spaced scan guards against non-unimodal SURE profiles when
  // the noise variances are mixed; golden section then refines the bracket.
  constexpr int kGridPoints = 256;
  std::vector<double> grid;
  grid.reserve(kGridPoints + 2);
  grid.push_back(0.0);
  const double lo_exp = std::log10(a_max) - 10.0;
  const double hi_exp = std::log10(a_max);
  for (int i = 0; i < kGridPoints; ++i) {
    const double e = lo_exp + (hi_exp - lo_exp) * i / (kGridPoints - 1.0);
    grid.push_back(std::pow(10.0, e));
  }

  std::size_t best = 0;
  double best_val = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double val = f(grid[i]);
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }

  const double lo = best == 0 ? 0.0 : grid[best - 1];
  const double hi = best + 1 < grid.size() ? grid[best + 1] : a_max;
  const double tol = 1e-8 * (1.0 + a_max);
  const double refined = golden_section(f, lo, hi, tol);

  // Keep the positive-part convention: a boundary-seeking minimizer is 0.
  double arg = refined;
  double val = f(refined);
  if (best_val < val) {
    arg = grid[best];
    val = best_val;
  }
  if (f(0.0) <= val) arg = 0.0;
  return arg;
}

double minimize_sure(const SureObjective& objective) {
  if (objective.homoskedastic()) {
    return moment_prior_variance(objective.residuals(), objective.noise_variances()(0));
  }
  return minimize_sure_numeric(objective);
}

double inflated_prior_variance(double regression_mse, double prior_variance) {
  if (!(regression_mse >= 0.0) || !(prior_variance >= 0.0)) {
    throw std::invalid_argument("inflated_prior_variance: arguments must be nonnegative");
  }
  return prior_variance + regression_mse;
}

ShrinkageRule::ShrinkageRule(std::shared_ptr<const Regressor> regression,
                             double prior_variance)
    : regression_(std::move(regression)),
      prior_variance_(std::max(prior_variance, 0.0)) {
  if (!regression_) {
    throw std::invalid_argument("ShrinkageRule: null regression handle");
  }
  if (!std::isfinite(prior_variance)) {
    throw std::invalid_argument("ShrinkageRule: prior variance must be finite");
  }
}

double ShrinkageRule::apply(const Eigen::Ref<const VectorXd>& x, double z,
                            double noise_variance) const {
  return bayes_shrink(regression_->predict_one(x), z, prior_variance_, noise_variance);
}

VectorXd ShrinkageRule::apply(const Eigen::Ref<const MatrixXd>& X,
                              const Eigen::Ref<const VectorXd>& z,
                              const Eigen::Ref<const VectorXd>& noise_variances) const {
  return bayes_shrink(regression_->predict(X), z, prior_variance_, noise_variances);
}

ExcessRiskValue excess_risk_mc(const ShrinkageRule& rule, const MeanFunction& true_m,
                               double prior_variance, double noise_variance,
                               std::int64_t n_mc, std::uint64_t seed,
                               const CovariateSampler& covariates) {
  if (n_mc < 100) {
    throw std::invalid_argument("excess_risk_mc: need at least 100 draws, got " +
                                std::to_string(n_mc));
  }
  if (!true_m) throw std::invalid_argument("excess_risk_mc: null mean function");
  if (!(prior_variance >= 0.0) || !(noise_variance > 0.0)) {
    throw std::invalid_argument("excess_risk_mc: bad variance arguments");
  }

  CovariateSampler draw_x = covariates;
  if (!draw_x) {
    draw_x = [](CounterRng& rng) { return VectorXd::Constant(1, rng.uniform()); };
  }

  // Fixed-size chunks with per-chunk substreams; the chunked sums are
  // reduced in index order, so results do not depend on the worker count.
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t n_chunks = (n_mc + kChunk - 1) / kChunk;
  std::vector<std::array<double, 4>> partial(static_cast<std::size_t>(n_chunks));

  const CounterRng base(seed);
  const double sd_prior = std::sqrt(prior_variance);
  const double sd_noise = std::sqrt(noise_variance);

  parallel_for(n_chunks, [&](std::int64_t c) {
    CounterRng rng = base.substream(static_cast<std::uint64_t>(c));
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(begin + kChunk, n_mc);
    double sum_d = 0.0, sum_d2 = 0.0, sum_t = 0.0, sum_t2 = 0.0;
    for (std::int64_t j = begin; j < end; ++j) {
      const VectorXd x = draw_x(rng);
      const double m = true_m(x);
      const double mu = m + sd_prior * rng.normal();
      const double z = mu + sd_noise * rng.normal();
      const double t_hat = rule.apply(x, z, noise_variance);
      const double t_star = bayes_shrink(m, z, prior_variance, noise_variance);
      const double loss_hat = (t_hat - mu) * (t_hat - mu);
      const double d = loss_hat - (t_star - mu) * (t_star - mu);
      sum_d += d;
      sum_d2 += d * d;
      sum_t += loss_hat;
      sum_t2 += loss_hat * loss_hat;
    }
    partial[static_cast<std::size_t>(c)] = {sum_d, sum_d2, sum_t, sum_t2};
  });

  double sum_d = 0.0, sum_d2 = 0.0, sum_t = 0.0, sum_t2 = 0.0;
  for (const auto& p : partial) {
    sum_d += p[0];
    sum_d2 += p[1];
    sum_t += p[2];
    sum_t2 += p[3];
  }

  const double n = static_cast<double>(n_mc);
  ExcessRiskValue out;
  out.n_mc = n_mc;
  out.value = sum_d / n;
  out.total_mse = sum_t / n;
  const double var_d = std::max(sum_d2 / n - out.value * out.value, 0.0);
  const double var_t = std::max(sum_t2 / n - out.total_mse * out.total_mse, 0.0);
  out.mc_std_error = std::sqrt(var_d / n);
  out.total_mse_se = std::sqrt(var_t / n);
  return out;
}

}  // namespace ebcf
