#include "senskit/stochsa.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "senskit/errors.hpp"
#include "senskit/rng.hpp"

namespace senskit {

namespace {

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t which) {
  return CounterRng(seed, which).bits(0);
}

}  // namespace

StochasticSaResult stochastic_sobol(const GpModel& mean_model, const GpModel& var_model,
                                    const InputSpec& spec, int n,
                                    const StochSaOptions& opts) {
  const int d = spec.dimension();
  if (n < 2) throw InputError("stochastic_sobol: need n >= 2");
  if (mean_model.design().cols() != d || var_model.design().cols() != d) {
    throw InputError("stochastic_sobol: surrogate input dimension does not match spec");
  }

  const PickFreezeDesign pf = pick_freeze_unit(n, d, opts.sampler, opts.seed);
  const Eigen::MatrixXd x = scale_pick_freeze(pf, spec);
  const Eigen::VectorXd y_mean = mean_model.predict_mean(x);

  // tau_hat over the A and B blocks (the same points that feed the variance
  // denominator).
  const int n2 = 2 * n;
  Eigen::VectorXd tau(n2);
  for (int i = 0; i < n2; ++i) {
    tau(i) = std::exp(var_model.predict(x.row(i)).mean);
  }
  const double mean_ab = y_mean.head(n2).mean();
  const double v_mean =
      (y_mean.head(n2).array() - mean_ab).square().sum() / (n2 - 1);
  const double e_var = tau.mean();
  const double v_total = v_mean + e_var;
  if (!(v_total > 0.0)) {
    throw DegeneracyError("stochastic_sobol: total variance is not positive");
  }

  EstimatorOptions est = opts.estimator;
  est.total_variance_override = v_total;
  if (est.names.empty()) est.names = spec.names();

  StochasticSaResult result;
  result.input_table = estimate_indices(y_mean, n, d, est);
  result.variance_decomposition = {v_mean, e_var, v_total};
  result.s_t_eps = e_var / v_total;
  if (est.bootstrap_replicates >= 2) {
    const auto stat = [&](const std::vector<int>& idx) {
      double t_sum = 0.0, m_sum = 0.0;
      for (int i : idx) {
        t_sum += tau(i);
        m_sum += y_mean(i);
      }
      const double m = m_sum / static_cast<double>(idx.size());
      double v = 0.0;
      for (int i : idx) v += (y_mean(i) - m) * (y_mean(i) - m);
      v /= static_cast<double>(idx.size()) - 1.0;
      const double e = t_sum / static_cast<double>(idx.size());
      return e / (v + e);
    };
    const BootstrapSummary s =
        bootstrap(stat, n2, est.bootstrap_replicates, est.level,
                  derived_seed(opts.seed, 11), est.ci);
    result.s_t_eps_std_error = s.std_error;
  }
  return result;
}

StochasticSaResult end_to_end_stochastic_sa(const StochasticSimulator& simulator,
                                            const InputSpec& spec, int design_size,
                                            int replicates, const StochSaOptions& opts) {
  const int d = spec.dimension();
  if (replicates < 2) throw InputError("end_to_end_stochastic_sa: need replicates >= 2");
  if (design_size < 10 * d) {
    throw InputError("end_to_end_stochastic_sa: need design_size >= 10*d");
  }

  const UnitDesign unit = lhs_sample(design_size, d, derived_seed(opts.seed, 1));
  const Eigen::MatrixXd sites = scale_design(unit.points, spec);

  ReplicatedData data;
  data.unique_design = sites;
  data.replicates.assign(static_cast<std::size_t>(design_size),
                         Eigen::VectorXd(replicates));
  for (int r = 0; r < replicates; ++r) {
    const Eigen::VectorXd y =
        simulator(sites, derived_seed(opts.seed, 100 + static_cast<std::uint64_t>(r)));
    if (y.size() != design_size) {
      throw InputError("end_to_end_stochastic_sa: simulator returned wrong response count");
    }
    for (int i = 0; i < design_size; ++i) {
      data.replicates[static_cast<std::size_t>(i)](r) = y(i);
    }
  }

  const StochasticKrigingData sk = stochastic_kriging_noise(data);
  const double mean_var =
      (sk.mean_outputs.array() - sk.mean_outputs.mean()).square().sum() /
      std::max(1, design_size - 1);

  FitOptions fit_mean = opts.fit;
  fit_mean.seed = derived_seed(opts.seed, 2);
  const Eigen::VectorXd mean_noise =
      (sk.noise_estimates.array() / sk.replicate_counts.array()).matrix();
  const GpModel mean_model = fit_gp(sites, sk.mean_outputs, FixedNoise{mean_noise}, fit_mean);

  FitOptions fit_var = opts.fit;
  fit_var.seed = derived_seed(opts.seed, 3);
  const GpModel var_model = fit_variance_surrogate(
      sites, sk.noise_estimates, 1e-8 * std::max(mean_var, 1e-300), fit_var);

  StochasticSaResult result = stochastic_sobol(mean_model, var_model, spec, opts.n, opts);
  result.simulator_calls = static_cast<long>(design_size) * replicates;
  return result;
}

nlohmann::json stochsa_to_json(const StochasticSaResult& result) {
  nlohmann::json j = table_to_json(result.input_table);
  j["s_t_eps"] = {{"estimate", result.s_t_eps},
                  {"std.error", result.s_t_eps_std_error}};
  j["variance_decomposition"] = {
      {"v_mean", result.variance_decomposition.v_mean},
      {"e_var", result.variance_decomposition.e_var},
      {"v_total", result.variance_decomposition.v_total}};
  if (result.simulator_calls > 0) j["simulator_calls"] = result.simulator_calls;
  return j;
}

}  // namespace senskit
