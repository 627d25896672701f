#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "senskit/core.hpp"
#include "senskit/errors.hpp"
#include "senskit/sampling.hpp"

#include <nlohmann/json.hpp>

using namespace senskit;

namespace {
const double kPi = std::acos(-1.0);

GaussianDependence bivariate(double s1, double s2, double rho, double m1 = 0.0,
                             double m2 = 0.0) {
  Eigen::VectorXd mean(2);
  mean << m1, m2;
  Eigen::MatrixXd cov(2, 2);
  cov << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
  return GaussianDependence(mean, cov);
}
}  // namespace

TEST_CASE("inverse_cdf uniform cases") {
  CHECK(inverse_cdf(Uniform{-kPi, kPi}, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(inverse_cdf(Uniform{0.0, 1.0}, 0.3) == doctest::Approx(0.3));
  CHECK(inverse_cdf(Uniform{0.0, 1.0}, 0.0) == 0.0);
  CHECK(inverse_cdf(Uniform{0.0, 1.0}, 1.0) == 1.0);
  CHECK_THROWS_AS(inverse_cdf(Uniform{0.0, 1.0}, 1.5), InputError);
}

TEST_CASE("gaussian quantile matches the integration oracle") {
  // Frozen oracle value for the classic 97.5% point.
  CHECK(inverse_cdf(Gaussian{0.0, 1.0}, 0.975) ==
        doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(inverse_cdf(Gaussian{0.0, 1.0}, 0.975) ==
        doctest::Approx(oracles::normal_quantile_by_bisection(0.975)).epsilon(1e-9));
  for (double u : {0.001, 0.05, 0.31, 0.5, 0.73, 0.95, 0.999}) {
    CAPTURE(u);
    CHECK(standard_normal_quantile(u) ==
          doctest::Approx(oracles::normal_quantile_by_bisection(u)).epsilon(5e-9));
  }
  CHECK(inverse_cdf(Gaussian{2.0, 3.0}, 0.975) ==
        doctest::Approx(2.0 + 3.0 * 1.9599639845400542).epsilon(1e-10));
}

TEST_CASE("quantiles are monotone in u") {
  double prev_g = -1e300, prev_u = -1e300;
  for (double u = 0.001; u < 1.0; u += 0.001) {
    const double g = inverse_cdf(Gaussian{0.5, 2.0}, u);
    const double v = inverse_cdf(Uniform{-1.0, 4.0}, u);
    CHECK(g > prev_g);
    CHECK(v > prev_u);
    prev_g = g;
    prev_u = v;
  }
}

TEST_CASE("gaussian quantile rejects the endpoints") {
  CHECK_THROWS_AS(inverse_cdf(Gaussian{0.0, 1.0}, 0.0), InputError);
  CHECK_THROWS_AS(inverse_cdf(Gaussian{0.0, 1.0}, 1.0), InputError);
}

TEST_CASE("inverse_cdf composed with the cdf oracle is the identity") {
  for (double x = -4.0; x <= 4.0; x += 0.5) {
    const double u = oracles::normal_cdf_by_integration(x);
    CHECK(std::abs(inverse_cdf(Gaussian{0.0, 1.0}, u) - x) < 1e-10);
  }
  // Non-standard Gaussian through the location-scale map.
  const Gaussian g{1.3, 2.1};
  for (double x = -5.0; x <= 7.0; x += 1.1) {
    const double u = oracles::normal_cdf_by_integration((x - g.mu) / g.sigma);
    CHECK(std::abs(inverse_cdf(g, u) - x) < 1e-9);
  }
  for (double x : {0.03, 0.41, 0.88}) {
    CHECK(inverse_cdf(Uniform{-2.0, 5.0}, (x + 2.0) / 7.0) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("scale_design on independent marginals") {
  InputSpec spec({"X1", "X2"}, {Uniform{-kPi, kPi}, Uniform{-kPi, kPi}});
  Eigen::MatrixXd u(1, 2);
  u << 0.5, 0.5;
  const Eigen::MatrixXd x = scale_design(u, spec);
  CHECK(x(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(x(0, 1) == doctest::Approx(0.0).epsilon(1e-14));

  Eigen::MatrixXd bad(1, 3);
  bad << 0.1, 0.2, 0.3;
  CHECK_THROWS_AS(scale_design(bad, spec), InputError);
}

TEST_CASE("scale_design with dependence maps the median row to the mean") {
  InputSpec spec({"X1", "X2"}, {Gaussian{1.0, 1.0}, Gaussian{2.0, 1.0}},
                 bivariate(1.0, 1.0, 0.3, 1.0, 2.0));
  Eigen::MatrixXd u(1, 2);
  u << 0.5, 0.5;
  const Eigen::MatrixXd x = scale_design(u, spec);
  CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("scale_design with dependence applies the Cholesky factor") {
  InputSpec spec({"X1", "X2"}, {Gaussian{0.0, 1.0}, Gaussian{0.0, 1.0}},
                 bivariate(1.0, 1.0, 0.5));
  Eigen::MatrixXd u(1, 2);
  u << 0.8413, 0.5;
  const Eigen::MatrixXd x = scale_design(u, spec);
  const double z1 = oracles::normal_quantile_by_bisection(0.8413);
  CHECK(x(0, 0) == doctest::Approx(z1).epsilon(1e-8));
  CHECK(x(0, 1) == doctest::Approx(0.5 * z1).epsilon(1e-8));
  // The paper-style sanity numbers.
  CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(2e-4));
  CHECK(x(0, 1) == doctest::Approx(0.5).epsilon(2e-4));
}

TEST_CASE("scaled dependent samples reproduce the joint moments") {
  const int n = 100000;
  Eigen::VectorXd mean(2);
  mean << 1.0, -2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 4.0, 1.2, 1.2, 2.0;
  InputSpec spec({"X1", "X2"}, {Gaussian{1.0, 2.0}, Gaussian{-2.0, std::sqrt(2.0)}},
                 GaussianDependence(mean, cov));
  const UnitDesign u = mc_sample(n, 2, 7);
  const Eigen::MatrixXd x = scale_design(u.points, spec);

  for (int j = 0; j < 2; ++j) {
    const double se = std::sqrt(cov(j, j) / n);
    CHECK(std::abs(x.col(j).mean() - mean(j)) < 3.0 * se);
  }
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd sample_cov = centered.transpose() * centered / (n - 1.0);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double se =
          std::sqrt((cov(r, r) * cov(c, c) + cov(r, c) * cov(r, c)) / n);
      CHECK(std::abs(sample_cov(r, c) - cov(r, c)) < 3.0 * se);
    }
  }
}

TEST_CASE("condition_gaussian on a diagonal covariance returns the marginals") {
  Eigen::VectorXd mean(3);
  mean << 1.0, 2.0, 3.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov.diagonal() << 4.0, 9.0, 16.0;
  const GaussianDependence dep(mean, cov);
  Eigen::VectorXd vals(1);
  vals << 10.0;
  const GaussianDependence cond = condition_gaussian(dep, {1}, vals);
  CHECK(cond.mean()(0) == doctest::Approx(1.0));
  CHECK(cond.mean()(1) == doctest::Approx(3.0));
  CHECK(cond.cov()(0, 0) == doctest::Approx(4.0));
  CHECK(cond.cov()(1, 1) == doctest::Approx(16.0));
  CHECK(cond.cov()(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("condition_gaussian matches the bivariate closed form") {
  const GaussianDependence dep = bivariate(1.0, 1.0, 0.5);
  Eigen::VectorXd vals(1);
  vals << 1.0;
  const GaussianDependence cond = condition_gaussian(dep, {0}, vals);
  CHECK(cond.mean()(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cond.cov()(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("condition_gaussian equicorrelated d=3 against the hand-solved system") {
  const double rho = 0.3;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(3, 3, rho);
  cov.diagonal().setOnes();
  const GaussianDependence dep(mean, cov);
  Eigen::VectorXd vals(1);
  vals << 2.0;
  const GaussianDependence cond = condition_gaussian(dep, {2}, vals);
  // Oracle: mu_I + Sigma_IJ * x / Sigma_JJ and the explicit 2x2 Schur
  // complement, assembled by hand.
  CHECK(cond.mean()(0) == doctest::Approx(rho * 2.0).epsilon(1e-12));
  CHECK(cond.mean()(1) == doctest::Approx(rho * 2.0).epsilon(1e-12));
  CHECK(cond.cov()(0, 0) == doctest::Approx(1.0 - rho * rho).epsilon(1e-12));
  CHECK(cond.cov()(1, 1) == doctest::Approx(1.0 - rho * rho).epsilon(1e-12));
  CHECK(cond.cov()(0, 1) == doctest::Approx(rho - rho * rho).epsilon(1e-12));
}

TEST_CASE("sequential conditioning is order independent") {
  Eigen::VectorXd mean(3);
  mean << 0.5, -1.0, 2.0;
  Eigen::MatrixXd cov(3, 3);
  cov << 2.0, 0.6, -0.3, 0.6, 1.5, 0.4, -0.3, 0.4, 1.2;
  const GaussianDependence dep(mean, cov);
  const double a = 1.1, b = -0.4;
  Eigen::VectorXd va(1), vb(1), vab(2);
  va << a;
  vb << b;
  vab << a, b;

  const GaussianDependence joint = condition_gaussian(dep, {0, 1}, vab);
  // X0 first, then X1 (index 0 of the reduced {1,2} space).
  const GaussianDependence c0 = condition_gaussian(dep, {0}, va);
  const GaussianDependence c01 = condition_gaussian(c0, {0}, vb);
  // X1 first, then X0 (index 0 of the reduced {0,2} space).
  const GaussianDependence c1 = condition_gaussian(dep, {1}, vb);
  const GaussianDependence c10 = condition_gaussian(c1, {0}, va);

  CHECK(c01.mean()(0) == doctest::Approx(joint.mean()(0)).epsilon(1e-10));
  CHECK(c10.mean()(0) == doctest::Approx(joint.mean()(0)).epsilon(1e-10));
  CHECK(c01.cov()(0, 0) == doctest::Approx(joint.cov()(0, 0)).epsilon(1e-10));
  CHECK(c10.cov()(0, 0) == doctest::Approx(joint.cov()(0, 0)).epsilon(1e-10));
}

TEST_CASE("condition_gaussian result is symmetric PSD") {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd cov(4, 4);
  cov << 2.0, 0.5, 0.3, 0.1, 0.5, 1.8, 0.2, 0.4, 0.3, 0.2, 1.1, 0.6, 0.1, 0.4, 0.6, 2.5;
  const GaussianDependence dep(mean, cov);
  Eigen::VectorXd vals(2);
  vals << 0.7, -0.2;
  const GaussianDependence cond = condition_gaussian(dep, {1, 3}, vals);
  const Eigen::MatrixXd& c = cond.cov();
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_NOTHROW(psd_cholesky(c));
}

TEST_CASE("condition_gaussian input validation") {
  const GaussianDependence dep = bivariate(1.0, 1.0, 0.2);
  Eigen::VectorXd one(1);
  one << 0.0;
  CHECK_THROWS_AS(condition_gaussian(dep, {}, Eigen::VectorXd()), InputError);
  CHECK_THROWS_AS(condition_gaussian(dep, {0, 1}, Eigen::VectorXd::Zero(2)), InputError);
  CHECK_THROWS_AS(condition_gaussian(dep, {2}, one), InputError);
  CHECK_THROWS_AS(condition_gaussian(dep, {0}, Eigen::VectorXd::Zero(2)), InputError);

  // Singular conditioning block.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd cov(3, 3);
  cov << 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0;
  cov.diagonal().array() += 0.0;
  const GaussianDependence singular(mean, cov);
  CHECK_THROWS_AS(condition_gaussian(singular, {0, 1}, Eigen::VectorXd::Zero(2)),
                  DegeneracyError);
}

TEST_CASE("psd_cholesky tolerates tiny negative pivots and rejects indefinite input") {
  Eigen::MatrixXd ok(2, 2);
  ok << 1.0, 1.0, 1.0, 1.0;  // rank deficient PSD
  const Eigen::MatrixXd l = psd_cholesky(ok);
  CHECK((l * l.transpose() - ok).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(psd_cholesky(bad), InputError);
}

TEST_CASE("InputSpec validation") {
  CHECK_THROWS_AS(InputSpec({}, {}), InputError);
  CHECK_THROWS_AS(InputSpec({"a", "a"}, {Uniform{0, 1}, Uniform{0, 1}}), InputError);
  CHECK_THROWS_AS(InputSpec({"a"}, {Uniform{1, 0}}), InputError);
  CHECK_THROWS_AS(InputSpec({"a"}, {Gaussian{0, -1}}), InputError);
  // Dependence demands Gaussian marginals consistent with the covariance.
  CHECK_THROWS_AS(InputSpec({"a", "b"}, {Uniform{0, 1}, Gaussian{0, 1}},
                            bivariate(1, 1, 0.2)),
                  InputError);
  CHECK_THROWS_AS(InputSpec({"a", "b"}, {Gaussian{0, 2}, Gaussian{0, 1}},
                            bivariate(1, 1, 0.2)),
                  InputError);
  CHECK_NOTHROW(InputSpec({"a", "b"}, {Gaussian{0, 1}, Gaussian{0, 1}},
                          bivariate(1, 1, 0.2)));
}

TEST_CASE("InputSpec JSON round trip") {
  InputSpec spec({"X1", "X2"}, {Gaussian{0.0, 1.0}, Gaussian{0.0, 2.0}},
                 bivariate(1.0, 2.0, 0.25));
  const nlohmann::json j = spec.to_json();
  const InputSpec back = InputSpec::from_json(j);
  CHECK(back.names() == spec.names());
  CHECK(back.dependence().has_value());
  CHECK(back.dependence()->cov()(0, 1) == doctest::Approx(0.5));

  const auto parsed = InputSpec::from_json(nlohmann::json::parse(R"({
    "names": ["u", "g"],
    "marginals": [{"kind": "uniform", "a": -1.0, "b": 2.0},
                   {"kind": "gaussian", "mu": 0.5, "sigma": 1.5}],
    "dependence": null
  })"));
  CHECK(parsed.dimension() == 2);
  CHECK(std::get<Uniform>(parsed.marginals()[0]).b == doctest::Approx(2.0));
  CHECK(std::get<Gaussian>(parsed.marginals()[1]).sigma == doctest::Approx(1.5));

  CHECK_THROWS_AS(InputSpec::from_json(nlohmann::json::parse(R"({"names": []})")),
                  InputError);
}
