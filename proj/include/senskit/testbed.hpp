#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "senskit/core.hpp"

namespace senskit {

// Reference first/total-order indices and output variance, where known in
// closed form.
struct AnalyticIndices {
  Eigen::VectorXd si;
  Eigen::VectorXd ti;
  double var_y = 0.0;
  std::optional<Eigen::VectorXd> shapley;
};

struct BenchmarkOptions {
  int d = 4;           // additive_uniform dimension
  double sigma1 = 1.0; // linear_gaussian
  double sigma2 = 1.0;
  double rho = 0.0;
};

// Built-in benchmark models. eval() is the deterministic response; the
// heteroscedastic sine model adds seed-controlled noise through eval_noisy().
class BenchmarkModel {
 public:
  static BenchmarkModel polynomial();
  static BenchmarkModel ishigami();
  static BenchmarkModel linear_gaussian(double sigma1, double sigma2, double rho);
  static BenchmarkModel additive_uniform(int d);
  static BenchmarkModel sine_hetero();
  static BenchmarkModel by_name(const std::string& name,
                                const BenchmarkOptions& opts = {});

  const std::string& name() const { return name_; }
  int dimension() const { return spec_.dimension(); }
  const InputSpec& input_spec() const { return spec_; }
  bool stochastic() const { return stochastic_; }

  // Deterministic response (the mean response for stochastic models).
  Eigen::VectorXd eval(const Eigen::MatrixXd& x) const;
  // Response with intrinsic noise; equals eval() for deterministic models.
  Eigen::VectorXd eval_noisy(const Eigen::MatrixXd& x, std::uint64_t noise_seed) const;
  // Intrinsic noise variance tau(x); zero for deterministic models.
  Eigen::VectorXd noise_variance(const Eigen::MatrixXd& x) const;

  const AnalyticIndices& analytic_indices() const;

 private:
  BenchmarkModel(std::string name, InputSpec spec,
                 std::function<double(const Eigen::RowVectorXd&)> f,
                 std::function<double(const Eigen::RowVectorXd&)> tau,
                 std::optional<AnalyticIndices> analytic, bool stochastic);

  std::string name_;
  InputSpec spec_;
  std::function<double(const Eigen::RowVectorXd&)> f_;
  std::function<double(const Eigen::RowVectorXd&)> tau_;
  std::optional<AnalyticIndices> analytic_;
  bool stochastic_;
};

// q-th raw moment of U(a, b): (b^{q+1} - a^{q+1}) / ((q+1)(b-a)).
double uniform_moment(int q, double a, double b);

}  // namespace senskit
