#include <doctest.h>

#include <cmath>

#include "senskit/errors.hpp"
#include "senskit/sobol.hpp"
#include "senskit/testbed.hpp"

using namespace senskit;

namespace {
const double kPi = std::acos(-1.0);
}

TEST_CASE("model evaluations by direct substitution") {
  const auto ish = BenchmarkModel::ishigami();
  Eigen::MatrixXd x(2, 3);
  x << 0.0, 0.0, 0.0, kPi / 2.0, kPi / 2.0, 0.0;
  const Eigen::VectorXd y = ish.eval(x);
  CHECK(y(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(8.0).epsilon(1e-12));

  const auto poly = BenchmarkModel::polynomial();
  Eigen::MatrixXd xp(1, 4);
  xp << 1.0, 1.0, 1.0, 1.0;
  CHECK(poly.eval(xp)(0) == doctest::Approx(2.0));

  const auto add = BenchmarkModel::additive_uniform(3);
  Eigen::MatrixXd xa(1, 3);
  xa << 0.1, 0.2, 0.3;
  CHECK(add.eval(xa)(0) == doctest::Approx(0.6));

  Eigen::MatrixXd wrong(1, 2);
  wrong << 0.0, 0.0;
  CHECK_THROWS_AS(ish.eval(wrong), InputError);
}

TEST_CASE("uniform moments") {
  CHECK(uniform_moment(2, 0.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(uniform_moment(4, 0.0, 1.0) == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
  CHECK(uniform_moment(0, -3.0, 7.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(uniform_moment(-1, 0.0, 1.0), InputError);
  CHECK_THROWS_AS(uniform_moment(2, 1.0, 1.0), InputError);
  // The variance ledger of the polynomial example: 9(1/5 - (1/3)^2) = 0.8.
  const double v1 = 9.0 * (uniform_moment(4, 0, 1) - uniform_moment(2, 0, 1) *
                                                        uniform_moment(2, 0, 1));
  CHECK(v1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("analytic index tables") {
  const auto poly = BenchmarkModel::polynomial().analytic_indices();
  CHECK(poly.si(0) == doctest::Approx(0.677));
  CHECK(poly.si(3) == doctest::Approx(0.282));
  CHECK(poly.ti(1) == doctest::Approx(0.041));
  CHECK(poly.var_y == doctest::Approx(1.182).epsilon(1e-3));

  const auto ish = BenchmarkModel::ishigami().analytic_indices();
  CHECK(ish.si(0) == doctest::Approx(0.314));
  CHECK(ish.si(1) == doctest::Approx(0.442));
  CHECK(ish.si(2) == doctest::Approx(0.0));
  CHECK(ish.ti(0) == doctest::Approx(0.558));
  CHECK(ish.ti(2) == doctest::Approx(0.244));
  CHECK(ish.var_y == doctest::Approx(13.8445879).epsilon(1e-6));

  // Independent-input tables satisfy sum Si <= 1 <= sum Ti.
  for (const char* name : {"polynomial", "ishigami", "additive_uniform"}) {
    const auto a = BenchmarkModel::by_name(name).analytic_indices();
    CHECK(a.si.sum() <= 1.0 + 1e-9);
    CHECK(a.ti.sum() >= 1.0 - 1e-9);
  }

  const auto lg = BenchmarkModel::linear_gaussian(1.0, 1.0, 0.4).analytic_indices();
  CHECK(lg.si(0) == doctest::Approx(0.7));  // (1+rho)/2
  CHECK(lg.si(1) == doctest::Approx(0.7));
  REQUIRE(lg.shapley.has_value());
  CHECK((*lg.shapley)(0) == doctest::Approx(0.5));
  CHECK(lg.var_y == doctest::Approx(2.8));

  CHECK_THROWS_AS(BenchmarkModel::sine_hetero().analytic_indices(), InputError);
}

TEST_CASE("unequal-sigma shapley closed form ships with the model") {
  const double s1 = 1.0, s2 = 2.0, rho = 0.5;
  const auto lg = BenchmarkModel::linear_gaussian(s1, s2, rho).analytic_indices();
  REQUIRE(lg.shapley.has_value());
  CHECK((*lg.shapley)(0) == doctest::Approx(0.5 - 2.25 / 14.0).epsilon(1e-12));
  CHECK((*lg.shapley)(0) == doctest::Approx(0.3393).epsilon(1e-3));
  CHECK((*lg.shapley)(1) == doctest::Approx(1.0 - 0.3393).epsilon(1e-3));
  CHECK(lg.var_y == doctest::Approx(7.0));
}

TEST_CASE("sine_hetero noise structure") {
  const auto sine = BenchmarkModel::sine_hetero();
  CHECK(sine.stochastic());
  Eigen::MatrixXd x(3, 1);
  x << 0.0, 2.0, 6.0;
  const Eigen::VectorXd tau = sine.noise_variance(x);
  CHECK(tau(0) == doctest::Approx(0.0));
  CHECK(tau(1) == doctest::Approx(0.04));
  CHECK(tau(2) == doctest::Approx(0.36));

  const Eigen::VectorXd a = sine.eval_noisy(x, 4);
  CHECK(a == sine.eval_noisy(x, 4));  // seed determinism
  CHECK(a != sine.eval_noisy(x, 5));
  CHECK(a(0) == doctest::Approx(std::sin(0.0)));  // zero noise at x = 0

  // Replicate moments at a fixed site.
  const int reps = 4000;
  Eigen::MatrixXd site(1, 1);
  site << 3.0;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double y = sine.eval_noisy(site, 1000 + static_cast<std::uint64_t>(r))(0);
    sum += y;
    sum_sq += y * y;
  }
  const double mean = sum / reps;
  const double var = sum_sq / reps - mean * mean;
  CHECK(mean == doctest::Approx(std::sin(3.0)).epsilon(0.05));
  CHECK(var == doctest::Approx(0.09).epsilon(0.15));

  const auto det = BenchmarkModel::polynomial();
  Eigen::MatrixXd xp = Eigen::MatrixXd::Constant(2, 4, 0.5);
  CHECK(det.eval_noisy(xp, 1) == det.eval(xp));
}

TEST_CASE("model registry") {
  CHECK(BenchmarkModel::by_name("ishigami").dimension() == 3);
  BenchmarkOptions o;
  o.d = 7;
  CHECK(BenchmarkModel::by_name("additive_uniform", o).dimension() == 7);
  CHECK_THROWS_AS(BenchmarkModel::by_name("nope"), InputError);
  CHECK_THROWS_AS(BenchmarkModel::additive_uniform(0), InputError);
  CHECK_THROWS_AS(BenchmarkModel::linear_gaussian(0.0, 1.0, 0.5), InputError);
  CHECK_THROWS_AS(BenchmarkModel::linear_gaussian(1.0, 1.0, 1.0), InputError);
}

TEST_CASE("estimates converge towards the analytic tables as N grows") {
  for (const char* name : {"polynomial", "ishigami", "additive_uniform"}) {
    CAPTURE(name);
    const auto model = BenchmarkModel::by_name(name);
    const auto& analytic = model.analytic_indices();
    const int d = model.dimension();
    std::vector<double> errors;
    for (int n : {1 << 9, 1 << 11, 1 << 13}) {
      const PickFreezeDesign pf = pick_freeze_unit(n, d, Generator::SobolSeq, 0);
      const Eigen::VectorXd y = model.eval(scale_pick_freeze(pf, model.input_spec()));
      EstimatorOptions opts;
      opts.bootstrap_replicates = 0;
      const SensitivityTable t = estimate_indices(y, n, d, opts);
      double err = 0.0;
      for (int i = 0; i < d; ++i) {
        err = std::max(err, std::abs(t.si(i).original - analytic.si(i)));
        err = std::max(err, std::abs(t.ti(i).original - analytic.ti(i)));
      }
      errors.push_back(err);
    }
    CHECK(errors.back() <= 0.03);
    CHECK(errors.back() <= errors.front() + 1e-12);  // net improvement
    CHECK((errors[1] <= errors[0] || errors[2] <= errors[1]));
  }
}

TEST_CASE("polynomial interaction structure") {
  // X1 and X4 are purely additive; X2 and X3 interact only through the X2*X3
  // term, whose interaction share is (1/144)/V(Y). (The reference table rounds
  // this structure into the total column; the printed reference estimates,
  // 0.023 vs 0.018, match the exact value used here.)
  const auto model = BenchmarkModel::polynomial();
  const PickFreezeDesign pf = pick_freeze_unit(5000, 4, Generator::SobolSeq, 0);
  const Eigen::VectorXd y = model.eval(scale_pick_freeze(pf, model.input_spec()));
  EstimatorOptions opts;
  opts.bootstrap_replicates = 0;
  const SensitivityTable t = estimate_indices(y, 5000, 4, opts);
  const double interaction = (1.0 / 144.0) / (0.8 + 7.0 / 144.0 + 1.0 / 3.0);
  for (int i : {0, 3}) {
    CHECK(std::abs(t.ti(i).original - t.si(i).original) < 0.02);
  }
  for (int i : {1, 2}) {
    CHECK(std::abs((t.ti(i).original - t.si(i).original) - interaction) < 0.02);
    CHECK(t.ti(i).original > t.si(i).original - 0.005);
  }
}
