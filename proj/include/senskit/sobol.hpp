#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "senskit/core.hpp"
#include "senskit/sampling.hpp"

namespace senskit {

// Stacked pick-freeze sample block [A; B; A_B(1); ...; A_B(d)] on the unit
// cube. Block i equals A except that column i is B's column i, bit for bit.
struct PickFreezeDesign {
  Eigen::MatrixXd rows;  // n*(d+2) x d
  int n = 0;
  int d = 0;
};

PickFreezeDesign build_pick_freeze(const UnitDesign& a, const UnitDesign& b);

// A and B drawn as the two halves of one 2d-dimensional design, mirroring the
// reference generator's behavior.
PickFreezeDesign pick_freeze_unit(int n, int d, Generator g, std::uint64_t seed);

// Scales a pick-freeze design onto the input space. Independent factors scale
// column-wise (block structure survives exactly). With Gaussian dependence,
// A and B scale through the joint transform while hybrid block i keeps B's
// scaled column i and redraws the remaining coordinates from their
// conditional distribution using A's unit rows, so that the first-order
// estimators target V(E[Y|X_i]) under correlation.
Eigen::MatrixXd scale_pick_freeze(const PickFreezeDesign& pf, const InputSpec& spec);

enum class FirstOrderEstimator { Saltelli, Jansen };
enum class CiKind { Normal, Percentile };

struct EstimatorOptions {
  FirstOrderEstimator first = FirstOrderEstimator::Saltelli;
  int bootstrap_replicates = 1000;  // 0 disables the bootstrap
  double level = 0.95;
  CiKind ci = CiKind::Normal;
  std::uint64_t seed = 0;  // bootstrap resampling seed
  std::vector<std::string> names;  // parameter names, default x1..xd
  // Replaces the pooled-variance denominator (used by stochastic SA where
  // indices are fractions of the full stochastic variance).
  std::optional<double> total_variance_override;
};

struct SensitivityRow {
  std::string parameter;
  std::string kind;  // "Si" or "Ti"
  double original = 0.0;
  double bias = 0.0;
  double std_error = 0.0;
  double low_ci = 0.0;
  double high_ci = 0.0;
};

struct SensitivityTable {
  std::vector<SensitivityRow> rows;  // d Si rows followed by d Ti rows
  double sum_first_order = 0.0;
  long total_model_runs = 0;
  std::string estimators;

  const SensitivityRow& si(int i) const { return rows.at(i); }
  const SensitivityRow& ti(int i) const {
    return rows.at(rows.size() / 2 + static_cast<std::size_t>(i));
  }
  int factors() const { return static_cast<int>(rows.size() / 2); }
};

// First-order (Saltelli by default, Jansen optional) and Jansen total-order
// indices from responses ordered like a PickFreezeDesign. The denominator is
// the unbiased sample variance pooled over the A and B blocks; outputs are
// centered by the pooled mean first, which makes the ratio estimators exactly
// invariant under affine output transforms. Bootstrap resamples rows jointly
// across all blocks.
SensitivityTable estimate_indices(const Eigen::VectorXd& y, int n, int d,
                                  const EstimatorOptions& opts = {});

struct BootstrapSummary {
  double bias = 0.0;
  double std_error = 0.0;
  double low_ci = 0.0;
  double high_ci = 0.0;
};

// Generic paired-row bootstrap: the statistic is evaluated on the identity
// row set for the original value and on resampled row sets (with
// replacement) for the replicates. CI per normal approximation
// original - bias +/- z*std_error, or percentile when requested.
BootstrapSummary bootstrap(const std::function<double(const std::vector<int>&)>& statistic,
                           int n_rows, int replicates, double level,
                           std::uint64_t seed, CiKind ci = CiKind::Normal);

void write_table_csv(std::ostream& os, const SensitivityTable& table);
nlohmann::json table_to_json(const SensitivityTable& table);
// Human-readable table in the reference printed layout (3 decimals).
void print_table(std::ostream& os, const SensitivityTable& table);

}  // namespace senskit
