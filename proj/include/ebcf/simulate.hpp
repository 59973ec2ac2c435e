#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ebcf/common.hpp"
#include "ebcf/rng.hpp"

namespace ebcf {

enum class CovariateLaw { kUniformCube, kGaussian };

/// Hierarchical generative model: X ~ covariate law, mu | X ~ N(mean(X), A),
/// Z | mu ~ N(mu, sigma_i^2). `sigma` holds either one common value (size 1)
/// or one value per unit (size n at draw time).
struct HierarchicalSpec {
  int dim = 1;
  CovariateLaw law = CovariateLaw::kUniformCube;
  MatrixXd gaussian_cov;  // Gaussian law only; empty means identity
  MeanFunction mean;
  double prior_variance = 0.0;
  VectorXd sigma = VectorXd::Ones(1);
};

struct HierarchicalSample {
  MatrixXd X;
  VectorXd mu;
  VectorXd z;
  VectorXd sigma;  // realized per-unit noise s.d.
};

/// Draws n units. Each unit consumes its own substream, so the sample is a
/// deterministic function of (spec, n, seed) independent of evaluation order.
HierarchicalSample draw_hierarchical(const HierarchicalSpec& spec, Index n,
                                     std::uint64_t seed);

/// Friedman benchmark regression surface on [0,1]^15:
/// 10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5; the last ten
/// coordinates are inert. Points outside the cube warn once, not error.
double friedman_m(const Eigen::Ref<const VectorXd>& x);

constexpr int kFriedmanDim = 15;

/// One hypergeometric draw: the number of marked items among `n_draws`
/// sampled without replacement from a population with `successes` marks.
/// Inverse-CDF with log-gamma pmf evaluation; exact at desk scale.
long hypergeometric(long n_draws, long successes, long population, CounterRng& rng);

/// Down-sampling plan: per-unit (events, population) counts, each unit
/// resampled to a common population of size target_population.
struct DownsampleSpec {
  long target_population = 0;
  std::vector<std::array<long, 2>> counts;  // {events, population}
};

std::vector<long> hypergeometric_downsample(const DownsampleSpec& spec,
                                            std::uint64_t seed);

/// Square-root variance-stabilizing transform of a down-sampled count:
/// z = sqrt(C/B) with nominal noise s.d. 1/(2 sqrt(B)).
struct VstObservation {
  double z = 0.0;
  double sigma = 0.0;
};

VstObservation sqrt_vst(long events_sampled, long target_population);

/// Back-transform of a shrunk estimate to the rate scale. Squares the input
/// as-is, so a negative estimate maps to a positive rate; callers that care
/// should count negatives before transforming.
double inverse_vst(double mu_hat);

}  // namespace ebcf
