#include "senskit/testbed.hpp"

#include <cmath>

#include "senskit/errors.hpp"
#include "senskit/rng.hpp"

namespace senskit {

namespace {

const double kPi = std::acos(-1.0);

InputSpec uniform_cube(int d, double a, double b, const std::string& prefix = "X") {
  std::vector<std::string> names;
  std::vector<Marginal> marginals;
  names.reserve(d);
  for (int j = 0; j < d; ++j) {
    names.push_back(prefix + std::to_string(j + 1));
    marginals.push_back(Uniform{a, b});
  }
  return InputSpec(std::move(names), std::move(marginals));
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

BenchmarkModel::BenchmarkModel(std::string name, InputSpec spec,
                               std::function<double(const Eigen::RowVectorXd&)> f,
                               std::function<double(const Eigen::RowVectorXd&)> tau,
                               std::optional<AnalyticIndices> analytic, bool stochastic)
    : name_(std::move(name)),
      spec_(std::move(spec)),
      f_(std::move(f)),
      tau_(std::move(tau)),
      analytic_(std::move(analytic)),
      stochastic_(stochastic) {}

BenchmarkModel BenchmarkModel::polynomial() {
  // y = 3 x1^2 + x2 x3 - 2 x4 on U(0,1)^4. Reference table values; the
  // variance ledger is 0.8 + 7/144 + 1/3.
  AnalyticIndices a;
  a.si = vec({0.677, 0.0, 0.0, 0.282});
  a.ti = vec({0.677, 0.041, 0.041, 0.282});
  a.var_y = 0.8 + 7.0 / 144.0 + 1.0 / 3.0;
  return BenchmarkModel(
      "polynomial", uniform_cube(4, 0.0, 1.0),
      [](const Eigen::RowVectorXd& x) {
        return 3.0 * x(0) * x(0) + x(1) * x(2) - 2.0 * x(3);
      },
      nullptr, std::move(a), false);
}

BenchmarkModel BenchmarkModel::ishigami() {
  AnalyticIndices a;
  a.si = vec({0.314, 0.442, 0.0});
  a.ti = vec({0.558, 0.442, 0.244});
  const double b = 0.1;
  const double pi4 = kPi * kPi * kPi * kPi;
  a.var_y = 0.5 * (1.0 + b * pi4 / 5.0) * (1.0 + b * pi4 / 5.0) + 49.0 / 8.0 +
            b * b * pi4 * pi4 * (1.0 / 18.0 - 1.0 / 50.0);
  return BenchmarkModel(
      "ishigami", uniform_cube(3, -kPi, kPi),
      [](const Eigen::RowVectorXd& x) {
        return std::sin(x(0)) + 7.0 * std::sin(x(1)) * std::sin(x(1)) +
               0.1 * std::pow(x(2), 4) * std::sin(x(0));
      },
      nullptr, std::move(a), false);
}

BenchmarkModel BenchmarkModel::linear_gaussian(double sigma1, double sigma2, double rho) {
  if (!(sigma1 > 0.0 && sigma2 > 0.0) || !(rho > -1.0 && rho < 1.0)) {
    throw InputError("linear_gaussian: need sigma > 0 and rho in (-1,1)");
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov(2, 2);
  cov << sigma1 * sigma1, rho * sigma1 * sigma2, rho * sigma1 * sigma2, sigma2 * sigma2;
  InputSpec spec({"X1", "X2"}, {Gaussian{0.0, sigma1}, Gaussian{0.0, sigma2}},
                 GaussianDependence(mean, cov));

  const double v = sigma1 * sigma1 + 2.0 * rho * sigma1 * sigma2 + sigma2 * sigma2;
  AnalyticIndices a;
  a.si = vec({(sigma1 + rho * sigma2) * (sigma1 + rho * sigma2) / v,
              (sigma2 + rho * sigma1) * (sigma2 + rho * sigma1) / v});
  a.ti = vec({(1.0 - rho * rho) * sigma1 * sigma1 / v,
              (1.0 - rho * rho) * sigma2 * sigma2 / v});
  a.var_y = v;
  const double phi1 =
      0.5 + (1.0 - rho * rho) * (sigma1 * sigma1 - sigma2 * sigma2) / (2.0 * v);
  a.shapley = vec({phi1, 1.0 - phi1});
  return BenchmarkModel(
      "linear_gaussian", std::move(spec),
      [](const Eigen::RowVectorXd& x) { return x(0) + x(1); }, nullptr,
      std::move(a), false);
}

BenchmarkModel BenchmarkModel::additive_uniform(int d) {
  if (d < 1) throw InputError("additive_uniform: need d >= 1");
  AnalyticIndices a;
  a.si = Eigen::VectorXd::Constant(d, 1.0 / d);
  a.ti = a.si;
  a.var_y = d / 12.0;
  return BenchmarkModel(
      "additive_uniform", uniform_cube(d, 0.0, 1.0),
      [](const Eigen::RowVectorXd& x) { return x.sum(); }, nullptr,
      std::move(a), false);
}

BenchmarkModel BenchmarkModel::sine_hetero() {
  // y(x) = sin(x) + eps, eps ~ N(0, 0.01 x^2), x in [0, 6].
  return BenchmarkModel(
      "sine_hetero", uniform_cube(1, 0.0, 6.0),
      [](const Eigen::RowVectorXd& x) { return std::sin(x(0)); },
      [](const Eigen::RowVectorXd& x) { return 0.01 * x(0) * x(0); },
      std::nullopt, true);
}

BenchmarkModel BenchmarkModel::by_name(const std::string& name,
                                       const BenchmarkOptions& opts) {
  if (name == "polynomial") return polynomial();
  if (name == "ishigami") return ishigami();
  if (name == "linear_gaussian") return linear_gaussian(opts.sigma1, opts.sigma2, opts.rho);
  if (name == "additive_uniform") return additive_uniform(opts.d);
  if (name == "sine_hetero") return sine_hetero();
  throw InputError("unknown benchmark model '" + name +
                   "' (expected polynomial, ishigami, linear_gaussian, "
                   "additive_uniform or sine_hetero)");
}

Eigen::VectorXd BenchmarkModel::eval(const Eigen::MatrixXd& x) const {
  if (x.cols() != dimension()) {
    throw InputError(name_ + ": input has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(dimension()));
  }
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = f_(x.row(i));
  return y;
}

Eigen::VectorXd BenchmarkModel::noise_variance(const Eigen::MatrixXd& x) const {
  if (x.cols() != dimension()) {
    throw InputError(name_ + ": input has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(dimension()));
  }
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(x.rows());
  if (tau_) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) tau(i) = tau_(x.row(i));
  }
  return tau;
}

Eigen::VectorXd BenchmarkModel::eval_noisy(const Eigen::MatrixXd& x,
                                           std::uint64_t noise_seed) const {
  Eigen::VectorXd y = eval(x);
  if (!stochastic_) return y;
  const Eigen::VectorXd tau = noise_variance(x);
  CounterRng rng(noise_seed);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (tau(i) > 0.0) {
      const double u = rng.uniform_open(static_cast<std::uint64_t>(i));
      y(i) += std::sqrt(tau(i)) * standard_normal_quantile(u);
    }
  }
  return y;
}

const AnalyticIndices& BenchmarkModel::analytic_indices() const {
  if (!analytic_) {
    throw InputError(name_ + ": no analytic sensitivity indices available");
  }
  return *analytic_;
}

double uniform_moment(int q, double a, double b) {
  if (q < 0) throw InputError("uniform_moment: q must be >= 0");
  if (!(a < b)) throw InputError("uniform_moment: need a < b");
  return (std::pow(b, q + 1) - std::pow(a, q + 1)) / ((q + 1) * (b - a));
}

}  // namespace senskit
