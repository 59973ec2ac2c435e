#include "ebcf/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "ebcf/crossfit.hpp"
#include "ebcf/csv.hpp"
#include "ebcf/parallel.hpp"
#include "ebcf/rng.hpp"
#include "ebcf/shrinkage.hpp"

namespace ebcf {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_mixture(const MixturePrior& prior, double noise_variance) {
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("mixture prior: noise variance must be positive");
  }
  if (!(prior.component_variance >= 0.0)) {
    throw std::invalid_argument("mixture prior: component variance must be nonnegative");
  }
  if (!std::isfinite(prior.mean1) || !std::isfinite(prior.mean2)) {
    throw std::invalid_argument("mixture prior: component means must be finite");
  }
}

double normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * kPi * variance);
}

// Recursive adaptive Simpson with depth and evaluation budgets; the
// accumulated error estimate is reported when a panel fails to converge.
struct QuadratureState {
  double err_bound = 0.0;
  long evals = 0;
};

constexpr long kMaxQuadratureEvals = 4000000;

template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double* fm_out,
                    QuadratureState& state) {
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  ++state.evals;
  *fm_out = fm;
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fb, double fm,
                        double whole, double tol, int depth, QuadratureState& state) {
  const double m = 0.5 * (a + b);
  double flm, frm;
  const double left = simpson_step(f, a, fa, m, fm, &flm, state);
  const double right = simpson_step(f, m, fm, b, fb, &frm, state);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0 || state.evals > kMaxQuadratureEvals) {
    state.err_bound += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1, state) +
         adaptive_simpson(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1, state);
}

template <class F>
double integrate(const F& f, double a, double b, double abs_tol) {
  QuadratureState state;
  const double fa = f(a);
  const double fb = f(b);
  double fm;
  const double whole = simpson_step(f, a, fa, b, fb, &fm, state);
  const double value = adaptive_simpson(f, a, b, fa, fb, fm, whole, abs_tol, 44, state);
  if (state.err_bound > abs_tol) {
    throw NumericalError("quadrature did not converge; achieved tolerance " +
                         std::to_string(state.err_bound) + " > requested " +
                         std::to_string(abs_tol));
  }
  return value;
}

}  // namespace

double fisher_information_marginal(const MixturePrior& prior, double noise_variance,
                                   double abs_tol) {
  check_mixture(prior, noise_variance);
  const double s2 = noise_variance + prior.component_variance;  // marginal variance
  const double s = std::sqrt(s2);

  const auto integrand = [&](double x) {
    const double f1 = normal_pdf(x, prior.mean1, s2);
    const double f2 = normal_pdf(x, prior.mean2, s2);
    const double f = 0.5 * (f1 + f2);
    if (f < 1e-300) return 0.0;
    const double df = -0.5 * ((x - prior.mean1) * f1 + (x - prior.mean2) * f2) / s2;
    return df * df / f;
  };

  // Beyond 12 marginal s.d. past the component means the remaining mass is
  // below 1e-12 of the total, which is past the requested tolerance.
  const double lo = std::min(prior.mean1, prior.mean2) - 12.0 * s;
  const double hi = std::max(prior.mean1, prior.mean2) + 12.0 * s;
  return integrate(integrand, lo, hi, abs_tol);
}

double bayes_risk_brown(const MixturePrior& prior, double noise_variance) {
  check_mixture(prior, noise_variance);
  const double s4 = noise_variance * noise_variance;
  const double tol = 1e-9 / std::max(1.0, s4);
  const double info = fisher_information_marginal(prior, noise_variance, tol);
  double risk = noise_variance * (1.0 - noise_variance * info);
  const double slack = 1e-7 * std::max(1.0, noise_variance);
  if (risk < -slack || risk > noise_variance + slack) {
    throw NumericalError("bayes_risk_brown: value " + std::to_string(risk) +
                         " outside [0, noise variance]");
  }
  return std::clamp(risk, 0.0, noise_variance);
}

double mixture_regret(const MixturePrior& prior, double noise_variance) {
  const double gaussian_bayes_risk = prior.component_variance * noise_variance /
                                     (prior.component_variance + noise_variance);
  const double regret = bayes_risk_brown(prior, noise_variance) - gaussian_bayes_risk;
  return std::max(regret, 0.0);
}

double posterior_mean_mixture(const MixturePrior& prior, double noise_variance,
                              double z) {
  check_mixture(prior, noise_variance);
  const double s2 = noise_variance + prior.component_variance;
  const double d1 = z - prior.mean1;
  const double d2 = z - prior.mean2;
  const double log1 = -0.5 * d1 * d1 / s2;
  const double log2 = -0.5 * d2 * d2 / s2;
  const double top = std::max(log1, log2);
  const double w1 = std::exp(log1 - top);
  const double w2 = std::exp(log2 - top);
  const double p1 = w1 / (w1 + w2);
  const double shrink1 =
      (prior.component_variance * z + noise_variance * prior.mean1) / s2;
  const double shrink2 =
      (prior.component_variance * z + noise_variance * prior.mean2) / s2;
  return p1 * shrink1 + (1.0 - p1) * shrink2;
}

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  // Golub-Welsch: the Jacobi matrix for Hermite polynomials has zero
  // diagonal and off-diagonal sqrt(i/2).
  MatrixXd jacobi = MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(0.5 * i);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(jacobi);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("gauss_hermite: eigenvalue decomposition failed");
  }
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights.resize(n);
  const double sqrt_pi = std::sqrt(kPi);
  for (int i = 0; i < n; ++i) {
    const double first = eig.eigenvectors()(0, i);
    rule.weights(i) = sqrt_pi * first * first;
  }
  return rule;
}

namespace {

const GaussHermiteRule& cached_gauss_hermite(int n) {
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_hermite(n)).first;
  return it->second;
}

}  // namespace

double posterior_mean_mixture_quadrature(const MixturePrior& prior,
                                         double noise_variance, double z, int nodes) {
  check_mixture(prior, noise_variance);
  const GaussHermiteRule& rule = cached_gauss_hermite(nodes);
  const double scale = std::sqrt(2.0 * prior.component_variance);
  double numerator = 0.0;
  double denominator = 0.0;
  for (double mean : {prior.mean1, prior.mean2}) {
    for (int i = 0; i < rule.nodes.size(); ++i) {
      const double mu = mean + scale * rule.nodes(i);
      const double lik = normal_pdf(z, mu, noise_variance);
      numerator += 0.5 * rule.weights(i) * mu * lik;
      denominator += 0.5 * rule.weights(i) * lik;
    }
  }
  if (denominator < 1e-300) {
    throw NumericalError("posterior_mean_mixture_quadrature: likelihood underflow at z = " +
                         std::to_string(z));
  }
  return numerator / denominator;
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kUnbiased:
      return "unbiased";
    case EstimatorKind::kRegressionOnly:
      return "regression";
    case EstimatorKind::kSureGrandMean:
      return "sure";
    case EstimatorKind::kEbcf:
      return "ebcf";
  }
  return "unknown";
}

namespace {

std::uint64_t fnv1a(const double* data, Index count, std::uint64_t h) {
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
  const std::size_t len = static_cast<std::size_t>(count) * sizeof(double);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t dataset_hash(const HierarchicalSample& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a(s.X.data(), s.X.size(), h);
  h = fnv1a(s.mu.data(), s.mu.size(), h);
  h = fnv1a(s.z.data(), s.z.size(), h);
  h = fnv1a(s.sigma.data(), s.sigma.size(), h);
  return h;
}

}  // namespace

RiskReport compare_estimators(const HierarchicalSpec& scenario, Index n,
                              int replicates, const std::vector<EstimatorKind>& set,
                              std::uint64_t seed, const BackendSpec& backend,
                              int n_folds) {
  if (replicates < 2) {
    throw std::invalid_argument("compare_estimators: need at least 2 replicates");
  }
  if (set.empty()) {
    throw std::invalid_argument("compare_estimators: empty estimator set");
  }

  const std::size_t n_est = set.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> mse(n_est,
                                       std::vector<double>(static_cast<std::size_t>(replicates), nan));
  std::vector<std::uint64_t> hashes(static_cast<std::size_t>(replicates), 0);

  const bool need_fit =
      std::any_of(set.begin(), set.end(), [](EstimatorKind k) {
        return k == EstimatorKind::kEbcf || k == EstimatorKind::kRegressionOnly;
      });

  parallel_for(replicates, [&](std::int64_t rep) {
    const std::uint64_t data_seed = derive_seed(seed, 0x64726177, static_cast<std::uint64_t>(rep));
    const HierarchicalSample sample = draw_hierarchical(scenario, n, data_seed);
    hashes[static_cast<std::size_t>(rep)] = dataset_hash(sample);

    EbcfFit fit;
    bool fit_ok = false;
    if (need_fit) {
      try {
        fit = ebcf_fit(sample.X, sample.z, sample.sigma, backend, n_folds,
                       derive_seed(seed, 0x65626366, static_cast<std::uint64_t>(rep)));
        fit_ok = true;
      } catch (const std::exception&) {
        fit_ok = false;  // recorded as failed cells below
      }
    }

    for (std::size_t e = 0; e < n_est; ++e) {
      double value = nan;
      try {
        switch (set[e]) {
          case EstimatorKind::kUnbiased:
            value = (sample.z - sample.mu).squaredNorm() / static_cast<double>(n);
            break;
          case EstimatorKind::kRegressionOnly:
            if (fit_ok) {
              value = (fit.m_hat - sample.mu).squaredNorm() / static_cast<double>(n);
            }
            break;
          case EstimatorKind::kSureGrandMean: {
            const VectorXd est = sure_grand_mean_fit(sample.z, sample.sigma);
            value = (est - sample.mu).squaredNorm() / static_cast<double>(n);
            break;
          }
          case EstimatorKind::kEbcf:
            if (fit_ok) {
              value = (fit.estimates - sample.mu).squaredNorm() / static_cast<double>(n);
            }
            break;
        }
      } catch (const std::exception&) {
        value = nan;
      }
      mse[e][static_cast<std::size_t>(rep)] = value;
    }
  });

  RiskReport report;
  report.n = n;
  report.prior_variance = scenario.prior_variance;
  report.sigma = scenario.sigma.size() == 1 ? scenario.sigma(0) : scenario.sigma.mean();
  report.replicates = replicates;
  report.dataset_hashes = std::move(hashes);

  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorRisk row;
    row.name = estimator_name(set[e]);
    double sum = 0.0, sum2 = 0.0;
    int ok = 0;
    for (double v : mse[e]) {
      if (std::isnan(v)) continue;
      sum += v;
      sum2 += v * v;
      ++ok;
    }
    row.replicates = ok;
    row.failures = replicates - ok;
    if (ok > 0) {
      row.mse = sum / ok;
      row.rmse = std::sqrt(row.mse);
      const double var = ok > 1 ? std::max(sum2 / ok - row.mse * row.mse, 0.0) *
                                      (static_cast<double>(ok) / (ok - 1))
                                : 0.0;
      row.std_error = std::sqrt(var / ok);
    } else {
      row.mse = row.rmse = row.std_error = nan;
    }
    report.estimators.push_back(std::move(row));
  }
  return report;
}

std::string risk_report_csv(const RiskReport& report, bool header) {
  std::string out;
  if (header) out += "estimator,n,A,sigma,mse,rmse,se,replicates\n";
  for (const auto& row : report.estimators) {
    out += row.name;
    out += ',' + std::to_string(report.n);
    out += ',' + format_double(report.prior_variance);
    out += ',' + format_double(report.sigma);
    out += ',' + format_double(row.mse);
    out += ',' + format_double(row.rmse);
    out += ',' + format_double(row.std_error);
    out += ',' + std::to_string(row.replicates);
    out += '\n';
  }
  return out;
}

std::string risk_report_table(const RiskReport& report) {
  char line[160];
  std::snprintf(line, sizeof(line), "n = %lld, A = %g, sigma = %g, replicates = %d\n",
                static_cast<long long>(report.n), report.prior_variance, report.sigma,
                report.replicates);
  std::string out = line;
  std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %6s\n", "estimator", "mse",
                "rmse", "se", "ok");
  out += line;
  for (const auto& row : report.estimators) {
    std::snprintf(line, sizeof(line), "%-12s %12.6f %12.6f %12.6f %6d\n",
                  row.name.c_str(), row.mse, row.rmse, row.std_error, row.replicates);
    out += line;
  }
  return out;
}

}  // namespace ebcf
