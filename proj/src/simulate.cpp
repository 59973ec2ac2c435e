#include "ebcf/simulate.hpp"

#include <Eigen/Cholesky>

#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace ebcf {

HierarchicalSample draw_hierarchical(const HierarchicalSpec& spec, Index n,
                                     std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("draw_hierarchical: need n >= 1");
  if (spec.dim < 1) throw std::invalid_argument("draw_hierarchical: need dim >= 1");
  if (!spec.mean) throw std::invalid_argument("draw_hierarchical: null mean function");
  if (!(spec.prior_variance >= 0.0)) {
    throw std::invalid_argument("draw_hierarchical: prior variance must be nonnegative");
  }
  if (spec.sigma.size() != 1 && spec.sigma.size() != n) {
    throw std::invalid_argument("draw_hierarchical: sigma must have size 1 or n");
  }
  for (Index i = 0; i < spec.sigma.size(); ++i) {
    if (!(spec.sigma(i) > 0.0)) {
      throw std::invalid_argument("draw_hierarchical: sigma must be positive");
    }
  }

  MatrixXd chol;
  if (spec.law == CovariateLaw::kGaussian && spec.gaussian_cov.size() != 0) {
    if (spec.gaussian_cov.rows() != spec.dim || spec.gaussian_cov.cols() != spec.dim) {
      throw std::invalid_argument("draw_hierarchical: covariance must be dim x dim");
    }
    Eigen::LLT<MatrixXd> llt(spec.gaussian_cov);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("draw_hierarchical: covariance is not positive definite");
    }
    chol = llt.matrixL();
  }

  HierarchicalSample out;
  out.X.resize(n, spec.dim);
  out.mu.resize(n);
  out.z.resize(n);
  out.sigma.resize(n);

  const CounterRng base = CounterRng(seed).substream(0x64617461);  // data stream
  const double sd_prior = std::sqrt(spec.prior_variance);
  VectorXd point(spec.dim);
  for (Index i = 0; i < n; ++i) {
    CounterRng rng = base.substream(static_cast<std::uint64_t>(i));
    if (spec.law == CovariateLaw::kUniformCube) {
      for (Index d = 0; d < spec.dim; ++d) point(d) = rng.uniform();
    } else {
      for (Index d = 0; d < spec.dim; ++d) point(d) = rng.normal();
      if (chol.size() != 0) point = chol * point;
    }
    out.X.row(i) = point.transpose();
    const double s = spec.sigma.size() == 1 ? spec.sigma(0) : spec.sigma(i);
    out.sigma(i) = s;
    out.mu(i) = spec.mean(point) + sd_prior * rng.normal();
    out.z(i) = out.mu(i) + s * rng.normal();
  }
  return out;
}

double friedman_m(const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != kFriedmanDim) {
    throw std::invalid_argument("friedman_m: expected a length-15 vector, got length " +
                                std::to_string(x.size()));
  }
  if ((x.array() < 0.0).any() || (x.array() > 1.0).any()) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "warning: friedman_m evaluated outside the unit cube\n";
    }
  }
  const double pi = 3.14159265358979323846;
  return 10.0 * std::sin(pi * x(0) * x(1)) + 20.0 * (x(2) - 0.5) * (x(2) - 0.5) +
         10.0 * x(3) + 5.0 * x(4);
}

namespace {

double log_choose(long n, long k) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

long hypergeometric(long n_draws, long successes, long population, CounterRng& rng) {
  if (population < 0 || successes < 0 || successes > population) {
    throw std::invalid_argument("hypergeometric: need 0 <= successes <= population");
  }
  if (n_draws < 0 || n_draws > population) {
    throw std::invalid_argument("hypergeometric: need 0 <= draws <= population");
  }
  const long k_lo = std::max(0L, n_draws - (population - successes));
  const long k_hi = std::min(n_draws, successes);
  if (k_lo == k_hi) return k_lo;

  // Inverse CDF: start from the lowest support point, then walk up with the
  // exact pmf ratio. The support has at most n_draws + 1 points.
  double log_p = log_choose(successes, k_lo) +
                 log_choose(population - successes, n_draws - k_lo) -
                 log_choose(population, n_draws);
  double pmf = std::exp(log_p);
  double cdf = pmf;
  const double u = rng.uniform();
  long k = k_lo;
  while (cdf <= u && k < k_hi) {
    const double ratio = (static_cast<double>(successes - k) *
                          static_cast<double>(n_draws - k)) /
                         (static_cast<double>(k + 1) *
                          static_cast<double>(population - successes - n_draws + k + 1));
    pmf *= ratio;
    cdf += pmf;
    ++k;
  }
  return k;
}

std::vector<long> hypergeometric_downsample(const DownsampleSpec& spec,
                                            std::uint64_t seed) {
  if (spec.target_population < 0) {
    throw std::invalid_argument("hypergeometric_downsample: negative target population");
  }
  std::vector<long> out(spec.counts.size());
  const CounterRng base = CounterRng(seed).substream(0x68797065);
  for (std::size_t i = 0; i < spec.counts.size(); ++i) {
    const long events = spec.counts[i][0];
    const long population = spec.counts[i][1];
    if (events < 0 || events > population) {
      throw std::invalid_argument("hypergeometric_downsample: unit " + std::to_string(i) +
                                  " has events outside [0, population]");
    }
    if (spec.target_population > population) {
      throw std::invalid_argument("hypergeometric_downsample: unit " + std::to_string(i) +
                                  " has population " + std::to_string(population) +
                                  " below the target " +
                                  std::to_string(spec.target_population));
    }
    CounterRng rng = base.substream(static_cast<std::uint64_t>(i));
    out[i] = hypergeometric(spec.target_population, events, population, rng);
  }
  return out;
}

VstObservation sqrt_vst(long events_sampled, long target_population) {
  if (target_population < 1) {
    throw std::invalid_argument("sqrt_vst: target population must be positive");
  }
  if (events_sampled < 0 || events_sampled > target_population) {
    throw std::invalid_argument("sqrt_vst: count " + std::to_string(events_sampled) +
                                " outside [0, " + std::to_string(target_population) + "]");
  }
  VstObservation obs;
  obs.z = std::sqrt(static_cast<double>(events_sampled) /
                    static_cast<double>(target_population));
  obs.sigma = 0.5 / std::sqrt(static_cast<double>(target_population));
  return obs;
}

double inverse_vst(double mu_hat) { return mu_hat * mu_hat; }

}  // namespace ebcf
