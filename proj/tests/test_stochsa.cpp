#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "senskit/errors.hpp"
#include "senskit/rng.hpp"
#include "senskit/stochsa.hpp"
#include "senskit/testbed.hpp"

using namespace senskit;

namespace {

// Deterministic builtin wrapped with additive N(0, c) noise.
StochasticSimulator noisy(const BenchmarkModel& model, double noise_var) {
  const double sd = std::sqrt(noise_var);
  return [model, sd](const Eigen::MatrixXd& x, std::uint64_t seed) {
    Eigen::VectorXd y = model.eval(x);
    if (sd > 0.0) {
      CounterRng rng(seed);
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        y(i) += sd * standard_normal_quantile(rng.uniform_open(static_cast<std::uint64_t>(i)));
      }
    }
    return y;
  };
}

StochSaOptions fast_options(std::uint64_t seed) {
  StochSaOptions opts;
  opts.seed = seed;
  opts.n = 2000;
  opts.estimator.bootstrap_replicates = 200;
  opts.fit.restarts = 3;
  return opts;
}

}  // namespace

TEST_CASE("zero-noise pipeline: s_t_eps vanishes and indices match plain Sobol'") {
  const auto model = BenchmarkModel::polynomial();
  const StochSaOptions opts = fast_options(4);
  const StochasticSaResult r =
      end_to_end_stochastic_sa(noisy(model, 0.0), model.input_spec(), 120, 4, opts);

  CHECK(r.s_t_eps < 0.02);
  CHECK(r.simulator_calls == 480);
  const auto& vd = r.variance_decomposition;
  CHECK(std::abs(vd.v_total - vd.v_mean - vd.e_var) <= 1e-12);

  // With tau_hat ~ 0 the table reduces to the deterministic indices.
  const auto& analytic = model.analytic_indices();
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(r.input_table.si(i).original - analytic.si(i)) < 0.08);
  }
  CHECK(r.input_table.si(0).original > r.input_table.si(3).original);
  CHECK(r.input_table.si(3).original > r.input_table.si(1).original);
}

TEST_CASE("stochastic_sobol with vanishing noise equals the plain estimator") {
  // Surrogates built by hand: the mean GP interpolates ishigami values on an
  // LHS design; the variance surrogate is trained on floored zeros.
  const auto model = BenchmarkModel::ishigami();
  const UnitDesign unit = lhs_sample(160, 3, 5);
  const Eigen::MatrixXd sites = scale_design(unit.points, model.input_spec());
  const Eigen::VectorXd y = model.eval(sites);
  FitOptions fit;
  fit.restarts = 3;
  fit.seed = 2;
  const GpModel mean_model = fit_gp(sites, y, ZeroNoise{}, fit);
  const GpModel var_model = fit_variance_surrogate(
      sites, Eigen::VectorXd::Zero(160), 1e-12, fit);

  StochSaOptions opts;
  opts.seed = 8;
  opts.estimator.bootstrap_replicates = 0;
  const StochasticSaResult r = stochastic_sobol(mean_model, var_model,
                                                model.input_spec(), 1024, opts);
  CHECK(r.s_t_eps < 1e-6);

  // Plain indices on the same surrogate predictions, no denominator override.
  const PickFreezeDesign pf = pick_freeze_unit(1024, 3, opts.sampler, opts.seed);
  const Eigen::VectorXd y_hat =
      mean_model.predict_mean(scale_pick_freeze(pf, model.input_spec()));
  EstimatorOptions plain;
  plain.bootstrap_replicates = 0;
  const SensitivityTable t = estimate_indices(y_hat, 1024, 3, plain);
  for (int i = 0; i < 3; ++i) {
    CHECK(r.input_table.si(i).original ==
          doctest::Approx(t.si(i).original).epsilon(1e-5));
    CHECK(r.input_table.ti(i).original ==
          doctest::Approx(t.ti(i).original).epsilon(1e-5));
  }
}

TEST_CASE("noisy polynomial keeps the factor ranking X1 > X4 > {X2, X3}") {
  const auto model = BenchmarkModel::polynomial();
  StochSaOptions opts = fast_options(7);
  opts.estimator.bootstrap_replicates = 0;
  const StochasticSaResult r =
      end_to_end_stochastic_sa(noisy(model, 0.1), model.input_spec(), 150, 8, opts);
  const double s1 = r.input_table.si(0).original;
  const double s2 = r.input_table.si(1).original;
  const double s3 = r.input_table.si(2).original;
  const double s4 = r.input_table.si(3).original;
  CHECK(s1 > s4);
  CHECK(s4 > s2);
  CHECK(s4 > s3);
}

TEST_CASE("ishigami with noise equal to the deterministic variance") {
  const auto model = BenchmarkModel::ishigami();
  const double v_f = model.analytic_indices().var_y;
  const StochSaOptions opts = fast_options(9);
  const StochasticSaResult r =
      end_to_end_stochastic_sa(noisy(model, v_f), model.input_spec(), 300, 24, opts);

  // E[tau]/(V_f + c) with c = V_f gives exactly one half.
  CHECK(r.s_t_eps > 0.40);
  CHECK(r.s_t_eps < 0.60);
  CHECK(r.s_t_eps == doctest::Approx(0.5).epsilon(0.12));

  // Input indices halve relative to the deterministic table: X2 0.442 -> 0.221.
  CHECK(std::abs(r.input_table.si(1).original - 0.221) < 0.05);
  const auto& vd = r.variance_decomposition;
  CHECK(std::abs(vd.v_total - vd.v_mean - vd.e_var) <= 1e-12);
}

TEST_CASE("quadrupling the injected noise raises s_t_eps") {
  const auto model = BenchmarkModel::ishigami();
  const double v_f = model.analytic_indices().var_y;
  StochSaOptions opts = fast_options(10);
  opts.n = 1000;
  opts.estimator.bootstrap_replicates = 0;
  const StochasticSaResult low =
      end_to_end_stochastic_sa(noisy(model, 0.5 * v_f), model.input_spec(), 200, 16, opts);
  const StochasticSaResult high =
      end_to_end_stochastic_sa(noisy(model, 2.0 * v_f), model.input_spec(), 200, 16, opts);
  CHECK(high.s_t_eps > low.s_t_eps);
}

TEST_CASE("additive model: total fraction plus seed index stays below one") {
  const auto model = BenchmarkModel::additive_uniform(2);
  const double v_f = model.analytic_indices().var_y;
  const StochSaOptions opts = fast_options(12);
  const StochasticSaResult r =
      end_to_end_stochastic_sa(noisy(model, v_f), model.input_spec(), 80, 20, opts);
  for (int i = 0; i < 2; ++i) {
    CHECK(r.input_table.ti(i).original + r.s_t_eps <= 1.0 + 0.05);
  }
}

TEST_CASE("heteroscedastic sine example: seed index matches quadrature") {
  const auto model = BenchmarkModel::sine_hetero();
  const StochSaOptions opts = fast_options(3);
  const StochasticSaResult r = end_to_end_stochastic_sa(
      [&](const Eigen::MatrixXd& x, std::uint64_t seed) { return model.eval_noisy(x, seed); },
      model.input_spec(), 100, 20, opts);

  // Oracle: V(sin X) on U(0,6) by quadrature; E[tau] = 0.01 * 36/3 = 0.12.
  const double e_sin = oracles::integrate([](double x) { return std::sin(x); }, 0, 6) / 6.0;
  const double e_sin2 =
      oracles::integrate([](double x) { return std::sin(x) * std::sin(x); }, 0, 6) / 6.0;
  const double v_sin = e_sin2 - e_sin * e_sin;
  const double expected = 0.12 / (v_sin + 0.12);
  CHECK(expected == doctest::Approx(0.1868).epsilon(1e-3));
  CHECK(std::abs(r.s_t_eps - expected) < 0.05);
}

TEST_CASE("stochastic_sobol validates its inputs") {
  const auto model = BenchmarkModel::additive_uniform(2);
  const StochSaOptions opts = fast_options(1);
  CHECK_THROWS_AS(
      end_to_end_stochastic_sa(noisy(model, 0.1), model.input_spec(), 80, 1, opts),
      InputError);
  CHECK_THROWS_AS(
      end_to_end_stochastic_sa(noisy(model, 0.1), model.input_spec(), 10, 4, opts),
      InputError);
}

TEST_CASE("stochsa JSON schema carries the extra blocks") {
  const auto model = BenchmarkModel::additive_uniform(2);
  StochSaOptions opts = fast_options(2);
  opts.n = 500;
  const StochasticSaResult r =
      end_to_end_stochastic_sa(noisy(model, 0.05), model.input_spec(), 60, 8, opts);
  const auto j = stochsa_to_json(r);
  CHECK(j.contains("rows"));
  CHECK(j.contains("summary"));
  CHECK(j.at("s_t_eps").contains("estimate"));
  CHECK(j.at("s_t_eps").contains("std.error"));
  CHECK(j.at("variance_decomposition").at("v_total").get<double>() ==
        doctest::Approx(r.variance_decomposition.v_total));
  CHECK(j.at("simulator_calls").get<long>() == 480);
}
