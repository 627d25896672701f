#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include <nlohmann/json_fwd.hpp>

#include "senskit/core.hpp"
#include "senskit/gp.hpp"
#include "senskit/sobol.hpp"

namespace senskit {

// Law-of-total-variance split of the stochastic output variance.
struct VarianceDecomposition {
  double v_mean = 0.0;  // V(Y_m)
  double e_var = 0.0;   // E[Y_v]
  double v_total = 0.0; // v_mean + e_var, exact by construction
};

struct StochasticSaResult {
  SensitivityTable input_table;  // indices of the controllable factors
  double s_t_eps = 0.0;          // total index of the seed variable
  double s_t_eps_std_error = 0.0;
  VarianceDecomposition variance_decomposition;
  long simulator_calls = 0;  // filled by the end-to-end pipeline
};

struct StochSaOptions {
  Generator sampler = Generator::SobolSeq;
  int n = 1000;  // pick-freeze block size used by the end-to-end pipeline
  std::uint64_t seed = 0;
  EstimatorOptions estimator;
  FitOptions fit;
};

// Surrogate-based SA of a stochastic simulator: input indices come from the
// mean surrogate over a pick-freeze design, normalized by
// v_total = V(Y_m) + E[tau_hat] so they are fractions of the full stochastic
// variance; s_t_eps = E[tau_hat]/v_total with both expectations taken over
// the same A/B evaluation points (tau_hat = exp of the variance surrogate's
// predictive mean). The s_t_eps standard error bootstraps the evaluation
// points.
StochasticSaResult stochastic_sobol(const GpModel& mean_model, const GpModel& var_model,
                                    const InputSpec& spec, int n,
                                    const StochSaOptions& opts = {});

// One stochastic run of the simulator batch: responses for each row under
// the given replicate seed.
using StochasticSimulator =
    std::function<Eigen::VectorXd(const Eigen::MatrixXd&, std::uint64_t)>;

// Full pipeline: LHS design -> replicated runs -> stochastic kriging ->
// mean GP + log-variance GP -> stochastic_sobol. Uses design_size*replicates
// simulator calls (reported in the result).
StochasticSaResult end_to_end_stochastic_sa(const StochasticSimulator& simulator,
                                            const InputSpec& spec, int design_size,
                                            int replicates,
                                            const StochSaOptions& opts = {});

nlohmann::json stochsa_to_json(const StochasticSaResult& result);

}  // namespace senskit
