#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace senskit {

struct Uniform {
  double a = 0.0;
  double b = 1.0;
};

struct Gaussian {
  double mu = 0.0;
  double sigma = 1.0;
};

using Marginal = std::variant<Uniform, Gaussian>;

// Quantile of the standard normal distribution, 0 < u < 1. Acklam's rational
// approximation refined by one Halley step on the erfc-based CDF; absolute
// error well below 1e-9 over the full open interval.
double standard_normal_quantile(double u);

// u-quantile of a marginal. Uniform accepts u in [0,1]; Gaussian requires
// 0 < u < 1 (the quantile is infinite at the endpoints).
double inverse_cdf(const Marginal& m, double u);

// Lower-triangular Cholesky factor of a symmetric positive semidefinite
// matrix. Pivots in [-rel_tol*max(diag), 0] clamp to zero; anything more
// negative throws InputError.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

// Joint Gaussian dependence over all d factors: X ~ N(mean, cov).
class GaussianDependence {
 public:
  GaussianDependence(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int dimension() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  // Cached tolerant Cholesky factor of cov.
  const Eigen::MatrixXd& chol() const { return chol_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
};

// Conditional distribution of the remaining factors given X_J = fixed_vals:
// mean_I + cov_IJ cov_JJ^-1 (x_J - mean_J), cov_II - cov_IJ cov_JJ^-1 cov_JI.
// J must be a nonempty proper subset. Throws DegeneracyError when cov_JJ is
// numerically singular.
GaussianDependence condition_gaussian(const GaussianDependence& dep,
                                      const std::vector<int>& fixed_idx,
                                      const Eigen::VectorXd& fixed_vals);

// Immutable description of the input space: names, marginals, and an
// optional joint Gaussian dependence. When dependence is present all
// marginals must be Gaussian and agree with its mean/diagonal.
class InputSpec {
 public:
  InputSpec(std::vector<std::string> names, std::vector<Marginal> marginals,
            std::optional<GaussianDependence> dependence = std::nullopt);

  int dimension() const { return static_cast<int>(marginals_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const std::optional<GaussianDependence>& dependence() const {
    return dependence_;
  }

  nlohmann::json to_json() const;
  static InputSpec from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> names_;
  std::vector<Marginal> marginals_;
  std::optional<GaussianDependence> dependence_;
};

// Maps unit-cube samples onto the input space. Independent factors go
// column-wise through their marginal quantile; with dependence set, rows go
// through standard-normal quantiles and then x = mean + L z with L the
// Cholesky factor of cov (marginals are consistent with cov by construction).
Eigen::MatrixXd scale_design(const Eigen::MatrixXd& unit,
                             const InputSpec& spec);

}  // namespace senskit
