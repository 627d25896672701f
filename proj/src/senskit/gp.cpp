#include "senskit/gp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "senskit/errors.hpp"
#include "senskit/rng.hpp"
#include "senskit/sampling.hpp"

namespace senskit {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_kernel(const Kernel& k) {
  if (!(k.process_variance > 0.0)) {
    throw InputError("kernel: process variance must be positive");
  }
  if (k.lengthscales.size() < 1 || (k.lengthscales.array() <= 0.0).any()) {
    throw InputError("kernel: lengthscales must be positive");
  }
}

double scaled_sq_distance(const Kernel& k, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) {
  double r2 = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double t = (x(j) - y(j)) / k.lengthscales(j);
    r2 += t * t;
  }
  return r2;
}

double correlation_from_r2(KernelKind kind, double r2) {
  if (kind == KernelKind::SquaredExponential) return std::exp(-0.5 * r2);
  const double r = std::sqrt(r2);
  const double s = std::sqrt(5.0) * r;
  return (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
}

// Unit-variance correlation matrix R(x_i, x_j).
Eigen::MatrixXd correlation_matrix(KernelKind kind, const Eigen::VectorXd& lengthscales,
                                   const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  Kernel k{kind, 1.0, lengthscales};
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = correlation_from_r2(kind, scaled_sq_distance(k, x.row(i), x.row(j)));
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

// Cholesky with escalating relative jitter 1e-10 .. 1e-4. Returns false when
// every level fails.
bool chol_with_jitter(const Eigen::MatrixXd& c, Eigen::MatrixXd& factor) {
  const double scale = c.diagonal().maxCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
    return true;
  }
  for (double rel = 1e-10; rel <= 1e-4 * 1.0000001; rel *= 10.0) {
    Eigen::MatrixXd jittered = c;
    jittered.diagonal().array() += rel * scale;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) {
      factor = llt.matrixL();
      return true;
    }
  }
  return false;
}

struct GlsTrend {
  double mu0 = 0.0;
  Eigen::VectorXd residual;  // y - mu0 * 1
};

GlsTrend gls_trend(const Eigen::MatrixXd& factor, const Eigen::VectorXd& y) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(y.size());
  const Eigen::VectorXd ci_y = factor.triangularView<Eigen::Lower>().solve(y);
  const Eigen::VectorXd ci_1 = factor.triangularView<Eigen::Lower>().solve(ones);
  GlsTrend t;
  t.mu0 = ci_1.dot(ci_y) / ci_1.dot(ci_1);
  t.residual = y.array() - t.mu0;
  return t;
}

// Nelder-Mead with box projection. Minimizes f; deterministic.
struct NmResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
};

NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                     const Eigen::VectorXd& upper, int max_iter) {
  const auto dim = static_cast<int>(x0.size());
  const auto clamp = [&](Eigen::VectorXd v) {
    for (int j = 0; j < dim; ++j) v(j) = std::clamp(v(j), lower(j), upper(j));
    return v;
  };
  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> value;
  simplex.push_back(clamp(x0));
  for (int j = 0; j < dim; ++j) {
    Eigen::VectorXd v = simplex.front();
    const double step = 0.25 * std::max(1.0, std::abs(v(j)) * 0.1);
    // Step towards the roomier side so the vertex never collapses onto v.
    v(j) += (upper(j) - v(j) >= v(j) - lower(j)) ? step : -step;
    simplex.push_back(clamp(v));
  }
  for (const auto& v : simplex) value.push_back(f(v));

  std::vector<int> order(simplex.size());
  for (int it = 0; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return value[static_cast<std::size_t>(a)] <
                                         value[static_cast<std::size_t>(b)]; });
    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[order.size() - 2];
    if (std::abs(value[static_cast<std::size_t>(worst)] -
                 value[static_cast<std::size_t>(best)]) <
        1e-10 * (1.0 + std::abs(value[static_cast<std::size_t>(best)]))) {
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int k : order) {
      if (k != worst) centroid += simplex[static_cast<std::size_t>(k)];
    }
    centroid /= dim;

    const auto& xw = simplex[static_cast<std::size_t>(worst)];
    Eigen::VectorXd xr = clamp(centroid + (centroid - xw));
    const double fr = f(xr);
    if (fr < value[static_cast<std::size_t>(best)]) {
      Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - xw));
      const double fe = f(xe);
      if (fe < fr) {
        simplex[static_cast<std::size_t>(worst)] = xe;
        value[static_cast<std::size_t>(worst)] = fe;
      } else {
        simplex[static_cast<std::size_t>(worst)] = xr;
        value[static_cast<std::size_t>(worst)] = fr;
      }
    } else if (fr < value[static_cast<std::size_t>(second_worst)]) {
      simplex[static_cast<std::size_t>(worst)] = xr;
      value[static_cast<std::size_t>(worst)] = fr;
    } else {
      Eigen::VectorXd xc = clamp(centroid + 0.5 * (xw - centroid));
      const double fc = f(xc);
      if (fc < value[static_cast<std::size_t>(worst)]) {
        simplex[static_cast<std::size_t>(worst)] = xc;
        value[static_cast<std::size_t>(worst)] = fc;
      } else {
        const auto& xb = simplex[static_cast<std::size_t>(best)];
        for (std::size_t k = 0; k < simplex.size(); ++k) {
          if (static_cast<int>(k) == best) continue;
          simplex[k] = clamp(xb + 0.5 * (simplex[k] - xb));
          value[k] = f(simplex[k]);
        }
      }
    }
  }
  NmResult out;
  for (std::size_t k = 0; k < simplex.size(); ++k) {
    if (value[k] < out.f) {
      out.f = value[k];
      out.x = simplex[k];
    }
  }
  return out;
}

}  // namespace

double kernel_eval(const Kernel& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  check_kernel(k);
  if (x.size() != k.lengthscales.size() || y.size() != k.lengthscales.size()) {
    throw InputError("kernel_eval: point dimension does not match lengthscales");
  }
  return k.process_variance * correlation_from_r2(k.kind, scaled_sq_distance(k, x, y));
}

GpModel::GpModel(Kernel kernel, Eigen::MatrixXd design, Eigen::VectorXd outputs,
                 Eigen::VectorXd noise_at_design, double predictive_noise)
    : kernel_(std::move(kernel)),
      design_(std::move(design)),
      outputs_(std::move(outputs)),
      noise_(std::move(noise_at_design)),
      predictive_noise_(predictive_noise) {
  check_kernel(kernel_);
  const auto n = design_.rows();
  if (n < 1 || design_.cols() != kernel_.lengthscales.size()) {
    throw InputError("GpModel: design shape does not match kernel dimension");
  }
  if (outputs_.size() != n || noise_.size() != n) {
    throw InputError("GpModel: outputs/noise length must equal the design size");
  }
  if ((noise_.array() < 0.0).any() || predictive_noise_ < 0.0) {
    throw InputError("GpModel: noise variances must be nonnegative");
  }

  Eigen::MatrixXd c =
      kernel_.process_variance *
      correlation_matrix(kernel_.kind, kernel_.lengthscales, design_);
  c.diagonal() += noise_;
  if (!chol_with_jitter(c, factor_)) {
    throw DegeneracyError("GpModel: covariance factorization failed after jitter escalation");
  }
  const GlsTrend t = gls_trend(factor_, outputs_);
  trend_ = t.mu0;
  const Eigen::VectorXd w = factor_.triangularView<Eigen::Lower>().solve(t.residual);
  alpha_ = factor_.transpose().triangularView<Eigen::Upper>().solve(w);
  log_likelihood_ = -0.5 * w.squaredNorm() -
                    factor_.diagonal().array().log().sum() -
                    0.5 * static_cast<double>(n) * kLog2Pi;
}

GpPrediction GpModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != design_.cols()) {
    throw InputError("GpModel::predict: point dimension mismatch");
  }
  const auto n = design_.rows();
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i) = kernel_eval(kernel_, x, design_.row(i));
  }
  GpPrediction p;
  p.mean = trend_ + c.dot(alpha_);
  p.noise_var = predictive_noise_;
  const Eigen::VectorXd w = factor_.triangularView<Eigen::Lower>().solve(c);
  p.var = std::max(0.0, kernel_.process_variance + p.noise_var - w.squaredNorm());
  return p;
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(x.row(i)).mean;
  return out;
}

GpModel GpModel::with_outputs(Eigen::VectorXd outputs) const {
  return GpModel(kernel_, design_, std::move(outputs), noise_, predictive_noise_);
}

namespace {

struct SearchSpace {
  Eigen::VectorXd lower;  // log-space bounds
  Eigen::VectorXd upper;
  int n_lengthscales = 0;
  bool has_nugget = false;    // ConstantUnknown: relative nugget variable
  bool has_variance = false;  // FixedNoise: log process variance variable
};

// Negative concentrated log likelihood at log-parameters theta.
double objective(const Eigen::VectorXd& theta, const SearchSpace& space,
                 KernelKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const Eigen::VectorXd* fixed_noise) {
  const auto n = x.rows();
  const Eigen::VectorXd ell = theta.head(space.n_lengthscales).array().exp().matrix();
  Eigen::MatrixXd k = correlation_matrix(kind, ell, x);
  Eigen::MatrixXd factor;
  if (space.has_variance) {
    const double sf2 = std::exp(theta(space.n_lengthscales));
    Eigen::MatrixXd c = sf2 * k;
    c.diagonal() += *fixed_noise;
    if (!chol_with_jitter(c, factor)) return std::numeric_limits<double>::infinity();
    const GlsTrend t = gls_trend(factor, y);
    const Eigen::VectorXd w = factor.triangularView<Eigen::Lower>().solve(t.residual);
    return 0.5 * w.squaredNorm() + factor.diagonal().array().log().sum() +
           0.5 * static_cast<double>(n) * kLog2Pi;
  }
  if (space.has_nugget) {
    k.diagonal().array() += std::exp(theta(space.n_lengthscales));
  }
  if (!chol_with_jitter(k, factor)) return std::numeric_limits<double>::infinity();
  const GlsTrend t = gls_trend(factor, y);
  const Eigen::VectorXd w = factor.triangularView<Eigen::Lower>().solve(t.residual);
  const double sf2 = w.squaredNorm() / static_cast<double>(n);
  if (!(sf2 > 0.0) || !std::isfinite(sf2)) return std::numeric_limits<double>::infinity();
  return 0.5 * static_cast<double>(n) * std::log(sf2) +
         factor.diagonal().array().log().sum() +
         0.5 * static_cast<double>(n) * (1.0 + kLog2Pi);
}

}  // namespace

GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const NoiseModel& noise, const FitOptions& opts) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2 || d < 1) throw InputError("fit_gp: need n >= 2 training points");
  if (y.size() != n) throw InputError("fit_gp: outputs length must match design");
  if (!y.allFinite() || !x.allFinite()) throw InputError("fit_gp: non-finite training data");
  const double y_var = (y.array() - y.mean()).square().sum() / std::max<double>(1.0, n - 1);
  if (!(y_var > 0.0)) throw DegeneracyError("fit_gp: outputs have zero variance");
  if (opts.restarts < 1) throw InputError("fit_gp: need at least one restart");

  const bool zero_noise = std::holds_alternative<ZeroNoise>(noise);
  const bool const_noise = std::holds_alternative<ConstantUnknownNoise>(noise);
  const Eigen::VectorXd* fixed = nullptr;
  if (const auto* f = std::get_if<FixedNoise>(&noise)) {
    if (f->variances.size() != n || (f->variances.array() < 0.0).any()) {
      throw InputError("fit_gp: fixed noise vector must be nonnegative with one entry per site");
    }
    fixed = &f->variances;
  }
  if (zero_noise) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if ((x.row(i) - x.row(j)).cwiseAbs().maxCoeff() == 0.0) {
          throw InputError("fit_gp: duplicate design rows with zero noise");
        }
      }
    }
  }

  SearchSpace space;
  space.n_lengthscales = static_cast<int>(d);
  space.has_nugget = const_noise;
  space.has_variance = fixed != nullptr;
  const int n_params = space.n_lengthscales + (space.has_nugget || space.has_variance ? 1 : 0);
  space.lower.resize(n_params);
  space.upper.resize(n_params);
  Eigen::VectorXd center(n_params);
  for (Eigen::Index j = 0; j < d; ++j) {
    double range = x.col(j).maxCoeff() - x.col(j).minCoeff();
    if (!(range > 0.0)) range = 1.0;
    space.lower(j) = std::log(opts.lengthscale_lower_rel * range);
    space.upper(j) = std::log(opts.lengthscale_upper_rel * range);
    center(j) = std::log(0.5 * range);
  }
  if (space.has_nugget) {
    space.lower(d) = std::log(1e-8);
    space.upper(d) = std::log(1e2);
    center(d) = std::log(1e-2);
  } else if (space.has_variance) {
    space.lower(d) = std::log(1e-6 * y_var);
    space.upper(d) = std::log(1e3 * y_var);
    center(d) = std::log(y_var);
  }

  const auto f = [&](const Eigen::VectorXd& theta) {
    return objective(theta, space, opts.kind, x, y, fixed);
  };
  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : 120 * (n_params + 2);

  // One heuristic center start plus `restarts` LHS-drawn starts.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(center);
  const UnitDesign lhs = lhs_sample(opts.restarts, n_params, opts.seed);
  for (int s = 0; s < opts.restarts; ++s) {
    Eigen::VectorXd t(n_params);
    for (int j = 0; j < n_params; ++j) {
      t(j) = space.lower(j) + lhs.points(s, j) * (space.upper(j) - space.lower(j));
    }
    starts.push_back(std::move(t));
  }

  NmResult best;
  double best_start = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    best_start = std::min(best_start, f(start));
    const NmResult r = nelder_mead(f, start, space.lower, space.upper, max_iter);
    if (r.f < best.f) best = r;
  }
  if (!std::isfinite(best.f) || best.f > best_start) {
    throw DegeneracyError("fit_gp: likelihood optimization failed to produce a usable model");
  }

  Kernel kernel;
  kernel.kind = opts.kind;
  kernel.lengthscales = best.x.head(d).array().exp().matrix();
  Eigen::VectorXd site_noise = Eigen::VectorXd::Zero(n);
  double predictive_noise = 0.0;
  if (fixed) {
    kernel.process_variance = std::exp(best.x(d));
    site_noise = *fixed;
  } else {
    // Recover the concentrated process variance at the optimum.
    Eigen::MatrixXd k = correlation_matrix(opts.kind, kernel.lengthscales, x);
    double g = 0.0;
    if (const_noise) {
      g = std::exp(best.x(d));
      k.diagonal().array() += g;
    }
    Eigen::MatrixXd factor;
    if (!chol_with_jitter(k, factor)) {
      throw DegeneracyError("fit_gp: covariance factorization failed after jitter escalation");
    }
    const GlsTrend t = gls_trend(factor, y);
    const Eigen::VectorXd w = factor.triangularView<Eigen::Lower>().solve(t.residual);
    kernel.process_variance = w.squaredNorm() / static_cast<double>(n);
    if (const_noise) {
      predictive_noise = kernel.process_variance * g;
      site_noise = Eigen::VectorXd::Constant(n, predictive_noise);
    }
  }
  return GpModel(std::move(kernel), x, y, std::move(site_noise), predictive_noise);
}

StochasticKrigingData stochastic_kriging_noise(const ReplicatedData& data) {
  const auto m = data.unique_design.rows();
  if (m < 1 || static_cast<Eigen::Index>(data.replicates.size()) != m) {
    throw InputError("stochastic_kriging_noise: one replicate vector per design site required");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if ((data.unique_design.row(i) - data.unique_design.row(j)).cwiseAbs().maxCoeff() == 0.0) {
        throw InputError("stochastic_kriging_noise: design sites must be unique");
      }
    }
  }
  StochasticKrigingData out;
  out.mean_outputs.resize(m);
  out.noise_estimates.resize(m);
  out.replicate_counts.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& rep = data.replicates[static_cast<std::size_t>(i)];
    if (rep.size() < 2) {
      throw InputError("stochastic_kriging_noise: every site needs >= 2 replicates");
    }
    const double mean = rep.mean();
    out.mean_outputs(i) = mean;
    out.noise_estimates(i) =
        (rep.array() - mean).square().sum() / static_cast<double>(rep.size() - 1);
    out.replicate_counts(i) = static_cast<double>(rep.size());
  }
  return out;
}

GpModel fit_variance_surrogate(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& noise_estimates,
                               double variance_floor, const FitOptions& opts) {
  if (noise_estimates.size() != x.rows()) {
    throw InputError("fit_variance_surrogate: one noise estimate per design site required");
  }
  if (!(variance_floor > 0.0)) {
    throw InputError("fit_variance_surrogate: variance floor must be positive");
  }
  if ((noise_estimates.array() < 0.0).any()) {
    throw InputError("fit_variance_surrogate: noise estimates must be nonnegative");
  }
  const Eigen::VectorXd log_tau =
      noise_estimates.array().max(variance_floor).log().matrix();
  const double spread =
      (log_tau.array() - log_tau.mean()).square().sum() / std::max<double>(1.0, x.rows() - 1);
  if (!(spread > 1e-20 * (1.0 + log_tau.mean() * log_tau.mean()))) {
    // All sites floored to the same value (e.g. a noise-free simulator): a
    // constant surrogate is the correct degenerate limit.
    Kernel k;
    k.kind = opts.kind;
    k.process_variance = 1e-10 * (1.0 + log_tau.mean() * log_tau.mean());
    k.lengthscales.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double range = x.col(j).maxCoeff() - x.col(j).minCoeff();
      k.lengthscales(j) = range > 0.0 ? range : 1.0;
    }
    const Eigen::VectorXd nugget =
        Eigen::VectorXd::Constant(x.rows(), k.process_variance);
    return GpModel(std::move(k), x, log_tau, nugget, 0.0);
  }
  // Log variances carry sampling noise of their own; a learnt nugget absorbs it.
  return fit_gp(x, log_tau, ConstantUnknownNoise{}, opts);
}

nlohmann::json GpModel::to_json() const {
  nlohmann::json j;
  j["kernel"] = {{"kind", kernel_.kind == KernelKind::SquaredExponential
                              ? "squared_exponential"
                              : "matern52"},
                 {"process_variance", kernel_.process_variance},
                 {"lengthscales", std::vector<double>(kernel_.lengthscales.begin(),
                                                      kernel_.lengthscales.end())}};
  j["trend"] = trend_;
  std::vector<std::vector<double>> design(static_cast<std::size_t>(design_.rows()));
  for (Eigen::Index i = 0; i < design_.rows(); ++i) {
    design[static_cast<std::size_t>(i)].assign(design_.row(i).begin(), design_.row(i).end());
  }
  j["design"] = design;
  j["outputs"] = std::vector<double>(outputs_.begin(), outputs_.end());
  j["noise_at_design"] = std::vector<double>(noise_.begin(), noise_.end());
  j["predictive_noise"] = predictive_noise_;
  return j;
}

GpModel GpModel::from_json(const nlohmann::json& j) {
  try {
    Kernel k;
    const std::string kind = j.at("kernel").at("kind").get<std::string>();
    if (kind == "squared_exponential") {
      k.kind = KernelKind::SquaredExponential;
    } else if (kind == "matern52") {
      k.kind = KernelKind::Matern52;
    } else {
      throw InputError("GpModel: unknown kernel kind '" + kind + "'");
    }
    k.process_variance = j.at("kernel").at("process_variance").get<double>();
    const auto ell = j.at("kernel").at("lengthscales").get<std::vector<double>>();
    k.lengthscales = Eigen::Map<const Eigen::VectorXd>(ell.data(),
                                                       static_cast<Eigen::Index>(ell.size()));
    const auto design_v = j.at("design").get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(design_v.size());
    Eigen::MatrixXd design(n, k.lengthscales.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(design_v[static_cast<std::size_t>(i)].size()) !=
          design.cols()) {
        throw InputError("GpModel: ragged design matrix in JSON");
      }
      for (Eigen::Index c = 0; c < design.cols(); ++c) {
        design(i, c) = design_v[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      }
    }
    const auto outputs = j.at("outputs").get<std::vector<double>>();
    const auto noise = j.at("noise_at_design").get<std::vector<double>>();
    return GpModel(
        std::move(k), std::move(design),
        Eigen::Map<const Eigen::VectorXd>(outputs.data(), static_cast<Eigen::Index>(outputs.size())),
        Eigen::Map<const Eigen::VectorXd>(noise.data(), static_cast<Eigen::Index>(noise.size())),
        j.value("predictive_noise", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("GpModel: malformed JSON document: ") + e.what());
  }
}

}  // namespace senskit
