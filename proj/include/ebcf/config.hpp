#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace ebcf {

/// CLI run configuration. Round-trips losslessly through JSON so runs can
/// be replayed from a saved config file.
struct SimulateConfig {
  long n = 1000;
  double prior_variance = 4.0;
  double sigma = 2.0;
  std::string mean = "friedman";  // friedman | zero
  int dim = 15;
  std::string law = "uniform";  // uniform | gaussian

  bool operator==(const SimulateConfig&) const = default;
};

struct FitConfig {
  int folds = 5;
  std::string backend = "knn";  // knn | ols | external
  int knn_k = 10;
  std::vector<int> knn_ks;  // nonempty: cross-validated choice
  bool intercept = true;
  std::string predictions;  // external backend CSV

  bool operator==(const FitConfig&) const = default;
};

struct DownsampleConfig {
  long target_population = 200;

  bool operator==(const DownsampleConfig&) const = default;
};

struct CompareConfig {
  std::string preset = "fig2b";  // fig2a | fig2b | fig2c
  std::vector<long> n_list = {250, 1000};
  int replicates = 50;
  std::vector<std::string> estimators = {"unbiased", "regression", "sure", "ebcf"};
  int folds = 5;
  std::vector<int> knn_ks = {5, 15, 40};

  bool operator==(const CompareConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out;
  SimulateConfig simulate;
  FitConfig fit;
  DownsampleConfig downsample;
  CompareConfig compare;

  bool operator==(const RunConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const SimulateConfig& c) {
  j = {{"n", c.n},     {"A", c.prior_variance}, {"sigma", c.sigma},
       {"m", c.mean},  {"d", c.dim},            {"law", c.law}};
}

inline void from_json(const nlohmann::json& j, SimulateConfig& c) {
  c.n = j.value("n", c.n);
  c.prior_variance = j.value("A", c.prior_variance);
  c.sigma = j.value("sigma", c.sigma);
  c.mean = j.value("m", c.mean);
  c.dim = j.value("d", c.dim);
  c.law = j.value("law", c.law);
}

inline void to_json(nlohmann::json& j, const FitConfig& c) {
  j = {{"folds", c.folds},       {"backend", c.backend},
       {"knn_k", c.knn_k},       {"knn_ks", c.knn_ks},
       {"intercept", c.intercept}, {"predictions", c.predictions}};
}

inline void from_json(const nlohmann::json& j, FitConfig& c) {
  c.folds = j.value("folds", c.folds);
  c.backend = j.value("backend", c.backend);
  c.knn_k = j.value("knn_k", c.knn_k);
  c.knn_ks = j.value("knn_ks", c.knn_ks);
  c.intercept = j.value("intercept", c.intercept);
  c.predictions = j.value("predictions", c.predictions);
}

inline void to_json(nlohmann::json& j, const DownsampleConfig& c) {
  j = {{"B", c.target_population}};
}

inline void from_json(const nlohmann::json& j, DownsampleConfig& c) {
  c.target_population = j.value("B", c.target_population);
}

inline void to_json(nlohmann::json& j, const CompareConfig& c) {
  j = {{"preset", c.preset},         {"n_list", c.n_list},
       {"replicates", c.replicates}, {"estimators", c.estimators},
       {"folds", c.folds},           {"knn_ks", c.knn_ks}};
}

inline void from_json(const nlohmann::json& j, CompareConfig& c) {
  c.preset = j.value("preset", c.preset);
  c.n_list = j.value("n_list", c.n_list);
  c.replicates = j.value("replicates", c.replicates);
  c.estimators = j.value("estimators", c.estimators);
  c.folds = j.value("folds", c.folds);
  c.knn_ks = j.value("knn_ks", c.knn_ks);
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"seed", c.seed},           {"out", c.out},
       {"simulate", c.simulate},   {"fit", c.fit},
       {"downsample", c.downsample}, {"compare", c.compare}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.out = j.value("out", c.out);
  if (j.contains("simulate")) j.at("simulate").get_to(c.simulate);
  if (j.contains("fit")) j.at("fit").get_to(c.fit);
  if (j.contains("downsample")) j.at("downsample").get_to(c.downsample);
  if (j.contains("compare")) j.at("compare").get_to(c.compare);
}

}  // namespace ebcf
