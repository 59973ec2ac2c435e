#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>

namespace ebcf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Scalar regression function of a covariate vector.
using MeanFunction = std::function<double(const VectorXd&)>;

/// Raised when an iterative numerical routine fails to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a regression design matrix is rank deficient.
class SingularDesignError : public NumericalError {
 public:
  explicit SingularDesignError(const std::string& what) : NumericalError(what) {}
};

}  // namespace ebcf
