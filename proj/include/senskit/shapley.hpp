#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "senskit/core.hpp"

namespace senskit {

// Cooperative game over players 0..d-1. Subsets are bitmasks (bit i set when
// player i belongs to the coalition); nu(empty) must be 0.
struct GameSpec {
  int d = 0;
  std::function<double(std::uint32_t)> nu;
};

GameSpec game_from_table(int d, std::vector<double> payoff_by_mask);

// Subset-weighted Shapley value, phi_i = sum_J |J|!(d-|J|-1)!/d! [nu(J+i)-nu(J)].
// Enumerates all 2^d coalitions; guarded at d <= 20.
Eigen::VectorXd exact_shapley(const GameSpec& game);

// Same value through the d! permutation form; guarded at d <= 9.
Eigen::VectorXd permutation_shapley(const GameSpec& game);

// Castro approximation: mean marginal contribution over the given
// permutations. With all d! distinct permutations this reproduces
// permutation_shapley exactly.
Eigen::VectorXd castro_shapley(const GameSpec& game,
                               const std::vector<std::vector<int>>& permutations);

std::vector<std::vector<int>> all_permutations(int d);
// M uniform permutations (with replacement), Fisher-Yates on the
// counter-based generator.
std::vector<std::vector<int>> sample_permutations(int d, int m, std::uint64_t seed);

// Vectorized model evaluator: one response per input row.
using ModelFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

struct ShapleyConfig {
  int m_permutations = 1000;
  int n_outer = 1;   // outer expectation samples per nu2 evaluation
  int n_inner = 3;   // conditional-variance samples, must be >= 2
  int n_var = 10000; // samples for the V(Y) normalizer
  std::uint64_t seed = 0;
};

struct ShapleyEstimate {
  Eigen::VectorXd phi;
  Eigen::VectorXd std_error;
  double total_variance = 0.0;
};

// Two-level MC estimate of nu2(I) = E_{X_~I}[ V(Y | X_~I) ] / v_y for a
// proper nonempty subset I: the outer loop draws the complement, the inner
// loop draws X_I from its conditional distribution (marginals when the spec
// has no dependence), and the conditional variance uses the unbiased n-1
// divisor (hence n_inner >= 2).
double nu2_estimate(const ModelFn& model, const InputSpec& spec,
                    const std::vector<int>& subset, const ShapleyConfig& cfg,
                    double v_y);

// Castro estimator of the Shapley effects with nu2 as characteristic
// function. nu2(empty) = 0 and nu2(full) = 1 are pinned, so the per-factor
// contributions telescope and sum(phi) = 1 up to rounding. The normalizer
// V(Y) comes from n_var unconditional model runs; std errors come from the
// permutation-level sample variance over M.
ShapleyEstimate estimate_shapley(const ModelFn& model, const InputSpec& spec,
                                 const ShapleyConfig& cfg);

}  // namespace senskit
