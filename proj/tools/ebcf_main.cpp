// Command-line surface: simulate datasets, fit the cross-fitted empirical
// Bayes estimator on CSV data, down-sample count data, and run estimator
// comparison sweeps that emit plot-ready CSV.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "ebcf/config.hpp"
#include "ebcf/crossfit.hpp"
#include "ebcf/csv.hpp"
#include "ebcf/oracle.hpp"
#include "ebcf/shrinkage.hpp"
#include "ebcf/simulate.hpp"

namespace {

using namespace ebcf;

// Exit codes: 0 success, 2 usage, 3 data validation, 4 numerical failure.
void emit_error(int code, const std::string& message) {
  std::cerr << "error_code: " << code << "\n" << message << "\n";
}

RunConfig load_config_or_default(const std::string& path) {
  RunConfig config;
  if (path.empty()) return config;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  j.get_to(config);
  return config;
}

MeanFunction mean_by_name(const std::string& name) {
  if (name == "friedman") {
    return [](const VectorXd& x) { return friedman_m(x); };
  }
  if (name == "zero") {
    return [](const VectorXd&) { return 0.0; };
  }
  throw std::invalid_argument("unknown mean function '" + name + "'");
}

HierarchicalSpec spec_from_simulate(const SimulateConfig& c) {
  HierarchicalSpec spec;
  spec.dim = c.mean == "friedman" ? kFriedmanDim : c.dim;
  spec.law = c.law == "gaussian" ? CovariateLaw::kGaussian : CovariateLaw::kUniformCube;
  spec.mean = mean_by_name(c.mean);
  spec.prior_variance = c.prior_variance;
  spec.sigma = VectorXd::Constant(1, c.sigma);
  return spec;
}

BackendSpec backend_from_fit(const FitConfig& c) {
  BackendSpec backend;
  if (c.backend == "knn") {
    backend.kind = BackendKind::kKnn;
    backend.knn_k = c.knn_k;
    backend.knn_cv_ks = c.knn_ks;
  } else if (c.backend == "ols") {
    backend.kind = BackendKind::kOls;
    backend.ols_intercept = c.intercept;
  } else if (c.backend == "external") {
    backend.kind = BackendKind::kExternal;
    if (c.predictions.empty()) {
      throw std::invalid_argument("fit: external backend needs --predictions <csv>");
    }
    backend.external_predictions =
        std::make_shared<const std::unordered_map<Index, double>>(
            load_predictions(c.predictions));
  } else {
    throw std::invalid_argument("unknown backend '" + c.backend + "'");
  }
  return backend;
}

int cmd_simulate(const RunConfig& config) {
  const SimulateConfig& c = config.simulate;
  const HierarchicalSpec spec = spec_from_simulate(c);
  const HierarchicalSample sample = draw_hierarchical(spec, c.n, config.seed);

  std::vector<CsvColumn> cols;
  CsvColumn index{"index", {}, true};
  for (Index i = 0; i < sample.z.size(); ++i) index.values.push_back(static_cast<double>(i));
  cols.push_back(std::move(index));
  for (int d = 0; d < spec.dim; ++d) {
    CsvColumn col{"x" + std::to_string(d), {}, false};
    col.values.assign(sample.X.col(d).data(), sample.X.col(d).data() + sample.X.rows());
    cols.push_back(std::move(col));
  }
  cols.push_back({"z", {sample.z.data(), sample.z.data() + sample.z.size()}, false});
  cols.push_back({"sigma", {sample.sigma.data(), sample.sigma.data() + sample.sigma.size()}, false});
  cols.push_back({"mu", {sample.mu.data(), sample.mu.data() + sample.mu.size()}, false});
  write_csv(config.out, cols);

  std::cout << "seed: " << config.seed << "\n";
  std::cout << "wrote " << config.out << " (" << sample.z.size() << " rows)\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const RunConfig& config) {
  const Dataset data = load_dataset(data_path);
  const Index n = data.z.size();
  if (n < 2 * static_cast<Index>(config.fit.folds)) {
    throw std::invalid_argument("fit: dataset has " + std::to_string(n) +
                                " rows; choose a smaller fold count (need n >= 2 * folds)");
  }
  const BackendSpec backend = backend_from_fit(config.fit);
  const EbcfFit fit = ebcf_fit(data.X, data.z, data.sigma, backend, config.fit.folds,
                               config.seed, data.index);

  std::vector<CsvColumn> cols;
  CsvColumn index{"index", {}, true};
  CsvColumn z{"z", {}, false};
  CsvColumn m_hat{"m_hat", {}, false};
  CsvColumn a_hat{"A_hat_fold", {}, false};
  CsvColumn mu_hat{"mu_hat", {}, false};
  CsvColumn sq_error{"sq_error", {}, false};
  for (Index i = 0; i < n; ++i) {
    index.values.push_back(static_cast<double>(data.index[static_cast<std::size_t>(i)]));
    z.values.push_back(data.z(i));
    m_hat.values.push_back(fit.m_hat(i));
    a_hat.values.push_back(fit.prior_variance_for(i));
    mu_hat.values.push_back(fit.estimates(i));
    if (data.has_mu) {
      const double err = fit.estimates(i) - data.mu(i);
      sq_error.values.push_back(err * err);
    }
  }
  cols.push_back(std::move(index));
  cols.push_back(std::move(z));
  cols.push_back(std::move(m_hat));
  cols.push_back(std::move(a_hat));
  cols.push_back(std::move(mu_hat));
  if (data.has_mu) cols.push_back(std::move(sq_error));
  write_csv(config.out, cols);

  if (data.has_mu) {
    const VectorXd err = fit.estimates - data.mu;
    const double mse = err.squaredNorm() / static_cast<double>(n);
    double var = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double d = err(i) * err(i) - mse;
      var += d * d;
    }
    var /= n > 1 ? static_cast<double>(n - 1) : 1.0;
    std::cout << "mse: " << format_double(mse) << "\n";
    std::cout << "mse_se: " << format_double(std::sqrt(var / static_cast<double>(n))) << "\n";
  }
  for (std::size_t f = 0; f < fit.fold_prior_variance.size(); ++f) {
    std::cout << "fold " << f << ": A_hat = " << format_double(fit.fold_prior_variance[f])
              << ", mean_sq_residual = " << format_double(fit.fold_mean_sq_residual[f])
              << "\n";
  }
  std::cout << "wrote " << config.out << "\n";
  return 0;
}

int cmd_downsample(const std::string& data_path, const RunConfig& config) {
  const CsvTable table = read_csv(data_path);
  const int events_col = table.column("events");
  const int population_col = table.column("population");
  if (events_col < 0 || population_col < 0) {
    throw std::invalid_argument("downsample: '" + data_path +
                                "' must have 'events' and 'population' columns");
  }

  DownsampleSpec spec;
  spec.target_population = config.downsample.target_population;
  spec.counts.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const long events = static_cast<long>(table.rows[r][static_cast<std::size_t>(events_col)]);
    const long population =
        static_cast<long>(table.rows[r][static_cast<std::size_t>(population_col)]);
    if (spec.target_population > population) {
      throw std::invalid_argument("downsample: row " + std::to_string(r + 1) +
                                  " has population " + std::to_string(population) +
                                  " below B = " + std::to_string(spec.target_population));
    }
    spec.counts.push_back({events, population});
  }

  const std::vector<long> sampled = hypergeometric_downsample(spec, config.seed);

  std::vector<CsvColumn> cols;
  const int index_col = table.column("index");
  CsvColumn index{"index", {}, true};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    index.values.push_back(index_col >= 0
                               ? table.rows[r][static_cast<std::size_t>(index_col)]
                               : static_cast<double>(r));
  }
  cols.push_back(std::move(index));
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].size() > 1 && table.header[c][0] == 'x') {
      CsvColumn col{table.header[c], {}, false};
      for (const auto& row : table.rows) col.values.push_back(row[c]);
      cols.push_back(std::move(col));
    }
  }
  CsvColumn z{"z", {}, false};
  CsvColumn sigma{"sigma", {}, false};
  CsvColumn mu{"mu", {}, false};
  for (std::size_t r = 0; r < sampled.size(); ++r) {
    const VstObservation obs = sqrt_vst(sampled[r], spec.target_population);
    z.values.push_back(obs.z);
    sigma.values.push_back(obs.sigma);
    mu.values.push_back(std::sqrt(static_cast<double>(spec.counts[r][0]) /
                                  static_cast<double>(spec.counts[r][1])));
  }
  cols.push_back(std::move(z));
  cols.push_back(std::move(sigma));
  cols.push_back(std::move(mu));
  write_csv(config.out, cols);

  std::cout << "seed: " << config.seed << "\n";
  std::cout << "wrote " << config.out << " (" << sampled.size() << " rows)\n";
  return 0;
}

std::vector<EstimatorKind> parse_estimators(const std::vector<std::string>& names) {
  std::vector<EstimatorKind> out;
  for (const auto& name : names) {
    if (name == "unbiased") {
      out.push_back(EstimatorKind::kUnbiased);
    } else if (name == "regression") {
      out.push_back(EstimatorKind::kRegressionOnly);
    } else if (name == "sure") {
      out.push_back(EstimatorKind::kSureGrandMean);
    } else if (name == "ebcf") {
      out.push_back(EstimatorKind::kEbcf);
    } else {
      throw std::invalid_argument("unknown estimator '" + name + "'");
    }
  }
  return out;
}

HierarchicalSpec preset_scenario(const std::string& preset) {
  double prior_variance;
  if (preset == "fig2a") {
    prior_variance = 0.0;
  } else if (preset == "fig2b") {
    prior_variance = 4.0;
  } else if (preset == "fig2c") {
    prior_variance = 9.0;
  } else {
    throw std::invalid_argument("unknown preset '" + preset + "'");
  }
  HierarchicalSpec spec;
  spec.dim = kFriedmanDim;
  spec.law = CovariateLaw::kUniformCube;
  spec.mean = [](const VectorXd& x) { return friedman_m(x); };
  spec.prior_variance = prior_variance;
  spec.sigma = VectorXd::Constant(1, 2.0);
  return spec;
}

int cmd_compare(const RunConfig& config) {
  const CompareConfig& c = config.compare;
  const HierarchicalSpec scenario = preset_scenario(c.preset);
  const std::vector<EstimatorKind> set = parse_estimators(c.estimators);

  BackendSpec backend;
  backend.kind = BackendKind::kKnn;
  backend.knn_cv_ks = c.knn_ks;

  std::string csv;
  bool first = true;
  for (long n : c.n_list) {
    const RiskReport report = compare_estimators(
        scenario, n, c.replicates, set, derive_seed(config.seed, 0x6e, static_cast<std::uint64_t>(n)),
        backend, c.folds);
    csv += risk_report_csv(report, first);
    first = false;
    std::cout << risk_report_table(report) << "\n";
  }
  std::ofstream out(config.out, std::ios::binary);
  if (!out) throw std::invalid_argument("compare: cannot open '" + config.out + "'");
  out << csv;
  std::cout << "wrote " << config.out << "\n";
  return 0;
}

std::string prescan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig config;
  try {
    config = load_config_or_default(prescan_config_path(argc, argv));
  } catch (const nlohmann::json::exception& e) {
    emit_error(3, std::string("config: ") + e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error(3, e.what());
    return 3;
  }

  CLI::App app{"Covariate-powered empirical Bayes estimation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", config.seed, "RNG seed");
    cmd->add_option("--out", config.out, "output CSV path")->required();
    cmd->add_option("--config", config_path, "JSON run configuration");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "draw a synthetic dataset");
  add_common(simulate);
  simulate->add_option("--n", config.simulate.n, "number of units")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--A", config.simulate.prior_variance, "prior variance")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--sigma", config.simulate.sigma, "noise s.d.")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--m", config.simulate.mean, "mean function")
      ->check(CLI::IsMember({"friedman", "zero"}));
  simulate->add_option("--d", config.simulate.dim, "covariate dimension (zero mean only)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--law", config.simulate.law, "covariate law")
      ->check(CLI::IsMember({"uniform", "gaussian"}));

  CLI::App* fit = app.add_subcommand("fit", "cross-fitted empirical Bayes estimates");
  add_common(fit);
  std::string fit_data;
  fit->add_option("--data", fit_data, "dataset CSV")->required();
  fit->add_option("--folds", config.fit.folds, "fold count")->check(CLI::Range(2, 1000));
  fit->add_option("--backend", config.fit.backend, "regression backend")
      ->check(CLI::IsMember({"knn", "ols", "external"}));
  fit->add_option("--knn-k", config.fit.knn_k, "neighbor count")->check(CLI::PositiveNumber);
  fit->add_option("--knn-ks", config.fit.knn_ks, "cross-validated neighbor candidates")
      ->delimiter(',');
  fit->add_flag("!--no-intercept", config.fit.intercept, "drop the OLS intercept");
  fit->add_option("--predictions", config.fit.predictions, "external predictions CSV");

  CLI::App* downsample = app.add_subcommand("downsample", "hypergeometric down-sampling");
  add_common(downsample);
  std::string downsample_data;
  downsample->add_option("--data", downsample_data, "counts CSV with events,population")
      ->required();
  downsample->add_option("--B", config.downsample.target_population, "target population")
      ->check(CLI::PositiveNumber);

  CLI::App* compare = app.add_subcommand("compare", "estimator risk comparison sweep");
  add_common(compare);
  compare->add_option("--preset", config.compare.preset, "scenario preset")
      ->check(CLI::IsMember({"fig2a", "fig2b", "fig2c"}));
  compare->add_option("--n-list", config.compare.n_list, "sample sizes")->delimiter(',');
  compare->add_option("--replicates", config.compare.replicates, "Monte Carlo replicates")
      ->check(CLI::Range(2, 100000));
  compare->add_option("--estimators", config.compare.estimators, "estimators to run")
      ->delimiter(',');
  compare->add_option("--folds", config.compare.folds, "fold count")
      ->check(CLI::Range(2, 1000));
  compare->add_option("--knn-ks", config.compare.knn_ks, "neighbor candidates")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error_code: 2\n";
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config);
    if (fit->parsed()) return cmd_fit(fit_data, config);
    if (downsample->parsed()) return cmd_downsample(downsample_data, config);
    if (compare->parsed()) return cmd_compare(config);
    emit_error(2, "no subcommand given");
    return 2;
  } catch (const NumericalError& e) {
    emit_error(4, e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    emit_error(3, e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error(4, e.what());
    return 4;
  }
}
