#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace senskit {

enum class KernelKind { SquaredExponential, Matern52 };

struct Kernel {
  KernelKind kind = KernelKind::Matern52;
  double process_variance = 1.0;   // sigma_f^2
  Eigen::VectorXd lengthscales;    // one per input dimension, all > 0
};

double kernel_eval(const Kernel& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Observation noise at the design sites.
struct ZeroNoise {};
struct ConstantUnknownNoise {};                    // nugget learnt by ML
struct FixedNoise { Eigen::VectorXd variances; };  // known per-site variances
using NoiseModel = std::variant<ZeroNoise, ConstantUnknownNoise, FixedNoise>;

struct GpPrediction {
  double mean = 0.0;
  double var = 0.0;        // includes noise_var, clamped at zero
  double noise_var = 0.0;  // model's noise estimate at the query site
};

// Trained Gaussian-process surrogate with constant trend. The covariance
// C = K + diag(noise) is factorized once at construction; the trend is the
// generalized-least-squares estimate, so predictions are linear in the
// training outputs.
class GpModel {
 public:
  GpModel(Kernel kernel, Eigen::MatrixXd design, Eigen::VectorXd outputs,
          Eigen::VectorXd noise_at_design, double predictive_noise = 0.0);

  const Kernel& kernel() const { return kernel_; }
  double trend() const { return trend_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& outputs() const { return outputs_; }
  const Eigen::VectorXd& noise_at_design() const { return noise_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double log_likelihood() const { return log_likelihood_; }
  double predictive_noise() const { return predictive_noise_; }

  GpPrediction predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& x) const;

  // Same hyperparameters and noise, new outputs (trend re-estimated, which is
  // itself linear in the outputs).
  GpModel with_outputs(Eigen::VectorXd outputs) const;

  nlohmann::json to_json() const;
  static GpModel from_json(const nlohmann::json& j);

 private:
  Kernel kernel_;
  Eigen::MatrixXd design_;
  Eigen::VectorXd outputs_;
  Eigen::VectorXd noise_;
  double predictive_noise_;
  double trend_ = 0.0;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd alpha_;
  double log_likelihood_ = 0.0;
};

struct FitOptions {
  KernelKind kind = KernelKind::Matern52;
  int restarts = 5;        // LHS-drawn starting points
  std::uint64_t seed = 0;
  int max_iterations = 0;  // per start; 0 picks 120*(#params)
  // Lengthscale search bounds relative to each input's observed range.
  double lengthscale_lower_rel = 1e-3;
  double lengthscale_upper_rel = 1e3;
};

// Maximum-likelihood fit over log lengthscales. The constant trend is always
// concentrated out in closed form; the process variance is concentrated too
// for Zero and ConstantUnknown noise (where C = sigma_f^2 * K), and becomes an
// explicit log-parameterized search variable for FixedNoise, where no closed
// form exists. Deterministic for fixed inputs and seed.
GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const NoiseModel& noise, const FitOptions& opts = {});

// Replicated observations at unique design sites.
struct ReplicatedData {
  Eigen::MatrixXd unique_design;           // m x d, rows unique
  std::vector<Eigen::VectorXd> replicates; // one output vector per site
};

struct StochasticKrigingData {
  Eigen::VectorXd mean_outputs;
  Eigen::VectorXd noise_estimates;  // unbiased per-site sample variances
  Eigen::VectorXd replicate_counts;
};

// Per-site sample means and unbiased variances; every site needs >= 2
// replicates. The mean surrogate uses variance/replicates as fixed noise; the
// variance surrogate consumes the raw variances.
StochasticKrigingData stochastic_kriging_noise(const ReplicatedData& data);

// GP over log noise variances, floored at variance_floor so zero-variance
// sites survive the transform. Downstream noise predictions are
// exp(predictive mean), hence positive.
GpModel fit_variance_surrogate(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& noise_estimates,
                               double variance_floor, const FitOptions& opts = {});

}  // namespace senskit
