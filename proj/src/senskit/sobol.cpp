#include "senskit/sobol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "senskit/errors.hpp"
#include "senskit/rng.hpp"

namespace senskit {

PickFreezeDesign build_pick_freeze(const UnitDesign& a, const UnitDesign& b) {
  if (a.n() != b.n() || a.d() != b.d()) {
    throw InputError("build_pick_freeze: A and B must have the same shape");
  }
  const int n = a.n();
  const int d = a.d();
  if (n < 1) throw InputError("build_pick_freeze: need N >= 1");

  PickFreezeDesign pf;
  pf.n = n;
  pf.d = d;
  pf.rows.resize(static_cast<Eigen::Index>(n) * (d + 2), d);
  pf.rows.topRows(n) = a.points;
  pf.rows.middleRows(n, n) = b.points;
  for (int i = 0; i < d; ++i) {
    auto block = pf.rows.middleRows(static_cast<Eigen::Index>(n) * (2 + i), n);
    block = a.points;
    block.col(i) = b.points.col(i);
  }
  return pf;
}

PickFreezeDesign pick_freeze_unit(int n, int d, Generator g, std::uint64_t seed) {
  UnitDesign wide;
  switch (g) {
    case Generator::MC: wide = mc_sample(n, 2 * d, seed); break;
    case Generator::LHS: wide = lhs_sample(n, 2 * d, seed); break;
    case Generator::SobolSeq: wide = sobol_sequence(n, 2 * d); break;
  }
  UnitDesign a{wide.points.leftCols(d), g, seed};
  UnitDesign b{wide.points.rightCols(d), g, seed};
  return build_pick_freeze(a, b);
}

Eigen::MatrixXd scale_pick_freeze(const PickFreezeDesign& pf, const InputSpec& spec) {
  const int n = pf.n;
  const int d = pf.d;
  if (d != spec.dimension()) {
    throw InputError("scale_pick_freeze: design dimension does not match spec");
  }
  if (!spec.dependence()) {
    return scale_design(pf.rows, spec);
  }

  const auto& dep = *spec.dependence();
  Eigen::MatrixXd out(pf.rows.rows(), d);
  const Eigen::MatrixXd a_scaled =
      scale_design(pf.rows.topRows(n), spec);
  const Eigen::MatrixXd b_scaled =
      scale_design(pf.rows.middleRows(n, n), spec);
  out.topRows(n) = a_scaled;
  out.middleRows(n, n) = b_scaled;

  for (int i = 0; i < d; ++i) {
    auto block = out.middleRows(static_cast<Eigen::Index>(n) * (2 + i), n);
    const GaussianDependence cond_template =
        condition_gaussian(dep, {i}, Eigen::VectorXd::Zero(1));
    // Conditional covariance does not depend on the conditioning value for
    // Gaussians; only the mean shifts. Precompute its Cholesky factor once.
    const Eigen::MatrixXd& l_cond = cond_template.chol();
    const double var_i = dep.cov()(i, i);
    Eigen::VectorXd z(d - 1);
    for (int r = 0; r < n; ++r) {
      const double xi = b_scaled(r, i);
      // Conditional mean: mu_I + cov_Ii (xi - mu_i) / var_i.
      Eigen::VectorXd mean_c(d - 1);
      int k = 0;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        mean_c(k) = dep.mean()(j) + dep.cov()(j, i) * (xi - dep.mean()(i)) / var_i;
        ++k;
      }
      k = 0;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        z(k++) = standard_normal_quantile(pf.rows(r, j));
      }
      const Eigen::VectorXd x_rest = mean_c + l_cond * z;
      block(r, i) = xi;
      k = 0;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        block(r, j) = x_rest(k++);
      }
    }
  }
  return out;
}

namespace {

struct IndexEstimates {
  Eigen::VectorXd si;
  Eigen::VectorXd ti;
};

// Core estimator on a row subset (identity for the original sample,
// resampled with replacement for bootstrap replicates).
IndexEstimates compute_indices(const Eigen::VectorXd& y, int n, int d,
                               FirstOrderEstimator first,
                               const std::vector<int>& idx,
                               std::optional<double> denom_override) {
  const auto fa = [&](int j) { return y(idx[static_cast<std::size_t>(j)]); };
  const auto fb = [&](int j) { return y(n + idx[static_cast<std::size_t>(j)]); };
  const auto fab = [&](int i, int j) {
    return y(static_cast<Eigen::Index>(n) * (2 + i) + idx[static_cast<std::size_t>(j)]);
  };

  double mean = 0.0;
  for (int j = 0; j < n; ++j) mean += fa(j) + fb(j);
  mean /= 2.0 * n;
  double var = 0.0;
  for (int j = 0; j < n; ++j) {
    var += (fa(j) - mean) * (fa(j) - mean) + (fb(j) - mean) * (fb(j) - mean);
  }
  var /= 2.0 * n - 1.0;
  if (!(var > 0.0)) {
    throw DegeneracyError("estimate_indices: output variance over the A/B blocks is zero "
                          "(degenerate model)");
  }
  const double denom = denom_override.value_or(var);

  IndexEstimates est;
  est.si.resize(d);
  est.ti.resize(d);
  for (int i = 0; i < d; ++i) {
    double acc_first = 0.0;
    double acc_total = 0.0;
    for (int j = 0; j < n; ++j) {
      if (first == FirstOrderEstimator::Saltelli) {
        acc_first += (fb(j) - mean) * (fab(i, j) - fa(j));
      } else {
        const double diff = fb(j) - fab(i, j);
        acc_first += diff * diff;
      }
      const double dt = fa(j) - fab(i, j);
      acc_total += dt * dt;
    }
    if (first == FirstOrderEstimator::Saltelli) {
      est.si(i) = acc_first / n / denom;
    } else {
      // Jansen first order in numerator form, V - (1/2N) sum (f(B)-f(AB_i))^2,
      // so a custom denominator slots in the same way as for Saltelli.
      est.si(i) = (var - acc_first / (2.0 * n)) / denom;
    }
    est.ti(i) = acc_total / (2.0 * n) / denom;
  }
  return est;
}

std::vector<int> identity_rows(int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = j;
  return idx;
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

BootstrapSummary summarize_bootstrap(double original, const std::vector<double>& boot,
                                     double level, CiKind ci) {
  BootstrapSummary s;
  const auto r = static_cast<double>(boot.size());
  double mean = 0.0;
  for (double b : boot) mean += b;
  mean /= r;
  double var = 0.0;
  for (double b : boot) var += (b - mean) * (b - mean);
  var /= r - 1.0;
  s.bias = mean - original;
  s.std_error = std::sqrt(var);
  if (ci == CiKind::Normal) {
    const double z = standard_normal_quantile(0.5 * (1.0 + level));
    s.low_ci = original - s.bias - z * s.std_error;
    s.high_ci = original - s.bias + z * s.std_error;
  } else {
    s.low_ci = percentile(boot, 0.5 * (1.0 - level));
    s.high_ci = percentile(boot, 0.5 * (1.0 + level));
  }
  return s;
}

}  // namespace

SensitivityTable estimate_indices(const Eigen::VectorXd& y, int n, int d,
                                  const EstimatorOptions& opts) {
  if (n < 2 || d < 1) throw InputError("estimate_indices: need n >= 2 and d >= 1");
  if (y.size() != static_cast<Eigen::Index>(n) * (d + 2)) {
    throw InputError("estimate_indices: responses must have length n*(d+2) = " +
                     std::to_string(static_cast<long>(n) * (d + 2)) + ", got " +
                     std::to_string(y.size()));
  }
  if (!y.allFinite()) throw InputError("estimate_indices: responses contain non-finite values");
  if (opts.bootstrap_replicates == 1 || opts.bootstrap_replicates < 0) {
    throw InputError("estimate_indices: bootstrap needs R >= 2 (or 0 to disable)");
  }
  if (!(opts.level > 0.0 && opts.level < 1.0)) {
    throw InputError("estimate_indices: confidence level must lie in (0,1)");
  }
  if (opts.total_variance_override && !(*opts.total_variance_override > 0.0)) {
    throw DegeneracyError("estimate_indices: total-variance override must be positive");
  }

  const IndexEstimates original =
      compute_indices(y, n, d, opts.first, identity_rows(n), opts.total_variance_override);

  const int r = opts.bootstrap_replicates;
  std::vector<std::vector<double>> boot_si(static_cast<std::size_t>(d)),
      boot_ti(static_cast<std::size_t>(d));
  if (r > 0) {
    for (auto& v : boot_si) v.reserve(static_cast<std::size_t>(r));
    for (auto& v : boot_ti) v.reserve(static_cast<std::size_t>(r));
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int rep = 0; rep < r; ++rep) {
      // Joint row resampling: the same index draws apply to every block.
      CounterRng rng(opts.seed, static_cast<std::uint64_t>(rep) + 1);
      for (int j = 0; j < n; ++j) {
        idx[static_cast<std::size_t>(j)] =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(n)));
      }
      const IndexEstimates rep_est =
          compute_indices(y, n, d, opts.first, idx, opts.total_variance_override);
      for (int i = 0; i < d; ++i) {
        boot_si[static_cast<std::size_t>(i)].push_back(rep_est.si(i));
        boot_ti[static_cast<std::size_t>(i)].push_back(rep_est.ti(i));
      }
    }
  }

  SensitivityTable table;
  table.total_model_runs = static_cast<long>(n) * (d + 2);
  table.estimators =
      std::string("First-order estimator: ") +
      (opts.first == FirstOrderEstimator::Saltelli ? "saltelli" : "jansen") +
      " | Total-order estimator: jansen";
  const auto param_name = [&](int i) {
    if (i < static_cast<int>(opts.names.size())) return opts.names[static_cast<std::size_t>(i)];
    return "x" + std::to_string(i + 1);
  };

  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < d; ++i) {
      SensitivityRow row;
      row.parameter = param_name(i);
      row.kind = pass == 0 ? "Si" : "Ti";
      row.original = pass == 0 ? original.si(i) : original.ti(i);
      if (r > 0) {
        const auto& boot = pass == 0 ? boot_si[static_cast<std::size_t>(i)]
                                     : boot_ti[static_cast<std::size_t>(i)];
        const BootstrapSummary s = summarize_bootstrap(row.original, boot, opts.level, opts.ci);
        row.bias = s.bias;
        row.std_error = s.std_error;
        row.low_ci = s.low_ci;
        row.high_ci = s.high_ci;
      } else {
        row.low_ci = row.high_ci = row.original;
      }
      table.rows.push_back(std::move(row));
    }
  }
  table.sum_first_order = original.si.sum();
  return table;
}

BootstrapSummary bootstrap(const std::function<double(const std::vector<int>&)>& statistic,
                           int n_rows, int replicates, double level,
                           std::uint64_t seed, CiKind ci) {
  if (replicates < 2) throw InputError("bootstrap: need R >= 2");
  if (n_rows < 1) throw InputError("bootstrap: need at least one row");
  const double original = statistic(identity_rows(n_rows));
  std::vector<double> boot;
  boot.reserve(static_cast<std::size_t>(replicates));
  std::vector<int> idx(static_cast<std::size_t>(n_rows));
  for (int rep = 0; rep < replicates; ++rep) {
    CounterRng rng(seed, static_cast<std::uint64_t>(rep) + 1);
    for (int j = 0; j < n_rows; ++j) {
      idx[static_cast<std::size_t>(j)] =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(n_rows)));
    }
    boot.push_back(statistic(idx));
  }
  return summarize_bootstrap(original, boot, level, ci);
}

void write_table_csv(std::ostream& os, const SensitivityTable& table) {
  os << "parameter,sensitivity,original,bias,std.error,low.ci,high.ci\n";
  char buf[40];
  for (const auto& row : table.rows) {
    os << row.parameter << ',' << row.kind;
    for (double v : {row.original, row.bias, row.std_error, row.low_ci, row.high_ci}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

nlohmann::json table_to_json(const SensitivityTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"parameter", row.parameter},
                    {"sensitivity", row.kind},
                    {"original", row.original},
                    {"bias", row.bias},
                    {"std.error", row.std_error},
                    {"low.ci", row.low_ci},
                    {"high.ci", row.high_ci}});
  }
  return {{"rows", rows},
          {"summary",
           {{"sum_first_order", table.sum_first_order},
            {"total_model_runs", table.total_model_runs},
            {"estimators", table.estimators}}}};
}

void print_table(std::ostream& os, const SensitivityTable& table) {
  char buf[160];
  os << '\n' << table.estimators << "\n\n";
  os << "Total number of model runs: " << table.total_model_runs << "\n\n";
  std::snprintf(buf, sizeof buf, "%.7g", table.sum_first_order);
  os << "Sum of first order indices: " << buf << '\n';
  os << "    original  bias std.error low.ci high.ci sensitivity parameters\n";
  const auto clean = [](double v) { return std::abs(v) < 5e-4 ? 0.0 : v; };
  int line = 1;
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof buf, "%d: %9.3f %5.3f %9.3f %6.3f %7.3f %11s %10s", line++,
                  clean(row.original), clean(row.bias), clean(row.std_error),
                  clean(row.low_ci), clean(row.high_ci), row.kind.c_str(),
                  row.parameter.c_str());
    os << buf << '\n';
  }
}

}  // namespace senskit
