// Test-side oracles, deliberately independent of the library implementation:
// plain quadrature, bisection, textbook dense linear algebra, and std::mt19937
// randomness. Expected values in the suites come from these routines (or were
// frozen from external reference implementations), never from the code under
// test.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracles {

// Standard normal CDF via Simpson integration of the density from 0 to x.
inline double normal_cdf_by_integration(double x) {
  const double a = 0.0;
  const int steps = 4000;  // even
  const double h = (x - a) / steps;
  const auto pdf = [](double t) {
    return std::exp(-0.5 * t * t) / 2.5066282746310002;
  };
  double acc = pdf(a) + pdf(x);
  for (int k = 1; k < steps; ++k) {
    acc += pdf(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  }
  return 0.5 + acc * h / 3.0;
}

// Quantile by bisection on the integrated CDF.
inline double normal_quantile_by_bisection(double u) {
  double lo = -12.0, hi = 12.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf_by_integration(mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Monte-Carlo integration of the defining L2-star discrepancy integral:
// D2^2 = int | Num(A, [0,x)) / N - vol([0,x)) |^2 dx. Returns the estimate of
// D2^2 and its standard error.
struct McIntegral {
  double value = 0.0;
  double std_error = 0.0;
};

inline McIntegral l2_star_discrepancy_sq_mc(const Eigen::MatrixXd& pts, int n_eval,
                                            unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = pts.rows();
  const auto d = pts.cols();
  double acc = 0.0, acc2 = 0.0;
  std::vector<double> x(static_cast<std::size_t>(d));
  for (int k = 0; k < n_eval; ++k) {
    double vol = 1.0;
    for (auto& xi : x) {
      xi = unif(gen);
      vol *= xi;
    }
    long count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      bool inside = true;
      for (Eigen::Index j = 0; j < d; ++j) {
        if (!(pts(i, j) < x[static_cast<std::size_t>(j)])) {
          inside = false;
          break;
        }
      }
      if (inside) ++count;
    }
    const double g = static_cast<double>(count) / static_cast<double>(n) - vol;
    acc += g * g;
    acc2 += g * g * g * g;
  }
  McIntegral out;
  out.value = acc / n_eval;
  const double var = (acc2 / n_eval - out.value * out.value) / n_eval;
  out.std_error = std::sqrt(std::max(var, 0.0));
  return out;
}

// Gaussian log marginal likelihood with constant trend, dense textbook route
// (LDLT solve + log-determinant), independent of the library's Cholesky path.
inline double gp_loglik_dense(const Eigen::MatrixXd& cov, const Eigen::VectorXd& y) {
  const auto n = y.size();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const double mu0 = ones.dot(ldlt.solve(y)) / ones.dot(ldlt.solve(ones));
  const Eigen::VectorXd r = y.array() - mu0;
  const double quad = r.dot(ldlt.solve(r));
  const double logdet = ldlt.vectorD().array().log().sum();
  return -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI);
}

// Simpson integration of an arbitrary function on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int steps = 20000) {
  const double h = (b - a) / steps;
  double acc = f(a) + f(b);
  for (int k = 1; k < steps; ++k) acc += f(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace oracles
