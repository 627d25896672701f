#include "senskit/core.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "senskit/errors.hpp"

namespace senskit {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

}  // namespace

double standard_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InputError("standard_normal_quantile: u must lie strictly in (0,1), got " +
                     std::to_string(u));
  }
  // Acklam's rational approximation, |error| < 1.15e-9 before refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the erfc-based CDF.
  const double e = standard_normal_cdf(x) - u;
  const double w = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= w / (1.0 + 0.5 * x * w);
  return x;
}

double inverse_cdf(const Marginal& m, double u) {
  if (std::holds_alternative<Uniform>(m)) {
    const auto& un = std::get<Uniform>(m);
    if (!(u >= 0.0 && u <= 1.0)) {
      throw InputError("inverse_cdf: uniform quantile requires u in [0,1]");
    }
    return un.a + u * (un.b - un.a);
  }
  const auto& g = std::get<Gaussian>(m);
  return g.mu + g.sigma * standard_normal_quantile(u);
}

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& m, double rel_tol) {
  const auto n = m.rows();
  if (n != m.cols()) throw InputError("psd_cholesky: matrix must be square");
  const double max_diag = n > 0 ? m.diagonal().maxCoeff() : 0.0;
  const double floor = -rel_tol * std::max(max_diag, 1.0e-300);

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
    if (pivot < floor) {
      throw InputError("psd_cholesky: matrix is not positive semidefinite "
                       "(pivot " + std::to_string(pivot) + " at index " +
                       std::to_string(j) + ")");
    }
    if (pivot <= 0.0) continue;  // clamp: zero diagonal, zero column below
    L(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

GaussianDependence::GaussianDependence(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto d = mean_.size();
  if (d < 1) throw InputError("GaussianDependence: dimension must be >= 1");
  if (cov_.rows() != d || cov_.cols() != d) {
    throw InputError("GaussianDependence: covariance shape does not match mean");
  }
  const double scale = cov_.cwiseAbs().maxCoeff();
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1.0)) {
    throw InputError("GaussianDependence: covariance must be symmetric");
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(cov_(j, j) > 0.0)) {
      throw InputError("GaussianDependence: covariance diagonal must be strictly positive");
    }
  }
  chol_ = psd_cholesky(cov_);
}

GaussianDependence condition_gaussian(const GaussianDependence& dep,
                                      const std::vector<int>& fixed_idx,
                                      const Eigen::VectorXd& fixed_vals) {
  const int d = dep.dimension();
  std::set<int> fixed(fixed_idx.begin(), fixed_idx.end());
  if (fixed.size() != fixed_idx.size()) {
    throw InputError("condition_gaussian: duplicate indices in conditioning set");
  }
  if (fixed.empty() || static_cast<int>(fixed.size()) >= d) {
    throw InputError("condition_gaussian: conditioning set must be a nonempty proper subset");
  }
  for (int j : fixed) {
    if (j < 0 || j >= d) throw InputError("condition_gaussian: index out of range");
  }
  if (fixed_vals.size() != static_cast<Eigen::Index>(fixed_idx.size())) {
    throw InputError("condition_gaussian: fixed value count does not match index count");
  }

  std::vector<int> keep;
  for (int j = 0; j < d; ++j) {
    if (!fixed.count(j)) keep.push_back(j);
  }
  const int nI = static_cast<int>(keep.size());
  const int nJ = static_cast<int>(fixed_idx.size());

  Eigen::MatrixXd sigma_jj(nJ, nJ), sigma_ij(nI, nJ), sigma_ii(nI, nI);
  Eigen::VectorXd mu_j(nJ), mu_i(nI), delta(nJ);
  for (int r = 0; r < nJ; ++r) {
    mu_j(r) = dep.mean()(fixed_idx[r]);
    delta(r) = fixed_vals(r) - mu_j(r);
    for (int c = 0; c < nJ; ++c) sigma_jj(r, c) = dep.cov()(fixed_idx[r], fixed_idx[c]);
  }
  for (int r = 0; r < nI; ++r) {
    mu_i(r) = dep.mean()(keep[r]);
    for (int c = 0; c < nJ; ++c) sigma_ij(r, c) = dep.cov()(keep[r], fixed_idx[c]);
    for (int c = 0; c < nI; ++c) sigma_ii(r, c) = dep.cov()(keep[r], keep[c]);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_jj);
  const double jj_scale = sigma_jj.diagonal().maxCoeff();
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(jj_scale, 1.0e-300)) {
    throw DegeneracyError("condition_gaussian: conditioning covariance block is numerically singular");
  }

  Eigen::VectorXd mean_c = mu_i + sigma_ij * ldlt.solve(delta);
  Eigen::MatrixXd cov_c = sigma_ii - sigma_ij * ldlt.solve(sigma_ij.transpose());
  cov_c = 0.5 * (cov_c + cov_c.transpose()).eval();  // kill roundoff asymmetry

  for (int r = 0; r < nI; ++r) {
    if (!(cov_c(r, r) > 0.0)) {
      throw DegeneracyError("condition_gaussian: conditional variance degenerated to zero");
    }
  }
  return GaussianDependence(std::move(mean_c), std::move(cov_c));
}

InputSpec::InputSpec(std::vector<std::string> names, std::vector<Marginal> marginals,
                     std::optional<GaussianDependence> dependence)
    : names_(std::move(names)),
      marginals_(std::move(marginals)),
      dependence_(std::move(dependence)) {
  if (marginals_.empty()) throw InputError("InputSpec: dimension must be >= 1");
  if (names_.size() != marginals_.size()) {
    throw InputError("InputSpec: names and marginals must have equal length");
  }
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) throw InputError("InputSpec: names must be unique");
  for (const auto& m : marginals_) {
    if (std::holds_alternative<Uniform>(m)) {
      const auto& u = std::get<Uniform>(m);
      if (!(u.a < u.b)) throw InputError("InputSpec: uniform marginal requires a < b");
    } else {
      const auto& g = std::get<Gaussian>(m);
      if (!(g.sigma > 0.0)) throw InputError("InputSpec: gaussian marginal requires sigma > 0");
    }
  }
  if (dependence_) {
    if (dependence_->dimension() != dimension()) {
      throw InputError("InputSpec: dependence dimension does not match marginals");
    }
    for (int j = 0; j < dimension(); ++j) {
      if (!std::holds_alternative<Gaussian>(marginals_[j])) {
        throw InputError("InputSpec: dependence requires all marginals Gaussian");
      }
      const auto& g = std::get<Gaussian>(marginals_[j]);
      const double var = dependence_->cov()(j, j);
      if (std::abs(g.sigma * g.sigma - var) > 1e-8 * var ||
          std::abs(g.mu - dependence_->mean()(j)) > 1e-8 * std::max(1.0, std::abs(g.mu))) {
        throw InputError("InputSpec: marginal " + names_[j] +
                         " is inconsistent with the joint dependence");
      }
    }
  }
}

Eigen::MatrixXd scale_design(const Eigen::MatrixXd& unit, const InputSpec& spec) {
  const int d = spec.dimension();
  if (unit.cols() != d) {
    throw InputError("scale_design: design has " + std::to_string(unit.cols()) +
                     " columns, spec expects " + std::to_string(d));
  }
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!(unit(i, j) >= 0.0 && unit(i, j) < 1.0)) {
        throw InputError("scale_design: unit sample outside [0,1)");
      }
    }
  }

  Eigen::MatrixXd out(unit.rows(), d);
  if (!spec.dependence()) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const Marginal& m = spec.marginals()[j];
      for (Eigen::Index i = 0; i < unit.rows(); ++i) {
        out(i, j) = inverse_cdf(m, unit(i, j));
      }
    }
    return out;
  }

  const auto& dep = *spec.dependence();
  const Eigen::MatrixXd& L = dep.chol();
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = standard_normal_quantile(unit(i, j));
    out.row(i) = (dep.mean() + L * z).transpose();
  }
  return out;
}

nlohmann::json InputSpec::to_json() const {
  nlohmann::json j;
  j["names"] = names_;
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : marginals_) {
    if (std::holds_alternative<Uniform>(m)) {
      const auto& u = std::get<Uniform>(m);
      ms.push_back({{"kind", "uniform"}, {"a", u.a}, {"b", u.b}});
    } else {
      const auto& g = std::get<Gaussian>(m);
      ms.push_back({{"kind", "gaussian"}, {"mu", g.mu}, {"sigma", g.sigma}});
    }
  }
  j["marginals"] = ms;
  if (dependence_) {
    const int d = dimension();
    std::vector<double> mean(d);
    std::vector<std::vector<double>> cov(d, std::vector<double>(d));
    for (int r = 0; r < d; ++r) {
      mean[r] = dependence_->mean()(r);
      for (int c = 0; c < d; ++c) cov[r][c] = dependence_->cov()(r, c);
    }
    j["dependence"] = {{"mean", mean}, {"cov", cov}};
  } else {
    j["dependence"] = nullptr;
  }
  return j;
}

InputSpec InputSpec::from_json(const nlohmann::json& j) {
  try {
    std::vector<std::string> names = j.at("names").get<std::vector<std::string>>();
    std::vector<Marginal> marginals;
    for (const auto& m : j.at("marginals")) {
      const std::string kind = m.at("kind").get<std::string>();
      if (kind == "uniform") {
        marginals.push_back(Uniform{m.at("a").get<double>(), m.at("b").get<double>()});
      } else if (kind == "gaussian") {
        marginals.push_back(Gaussian{m.at("mu").get<double>(), m.at("sigma").get<double>()});
      } else {
        throw InputError("InputSpec: unknown marginal kind '" + kind + "'");
      }
    }
    std::optional<GaussianDependence> dep;
    if (j.contains("dependence") && !j.at("dependence").is_null()) {
      const auto& dj = j.at("dependence");
      const auto mean_v = dj.at("mean").get<std::vector<double>>();
      const auto cov_v = dj.at("cov").get<std::vector<std::vector<double>>>();
      const int d = static_cast<int>(mean_v.size());
      Eigen::VectorXd mean(d);
      Eigen::MatrixXd cov(d, d);
      for (int r = 0; r < d; ++r) {
        mean(r) = mean_v[r];
        if (static_cast<int>(cov_v.at(r).size()) != d) {
          throw InputError("InputSpec: dependence covariance is not square");
        }
        for (int c = 0; c < d; ++c) cov(r, c) = cov_v[r][c];
      }
      dep.emplace(std::move(mean), std::move(cov));
    }
    return InputSpec(std::move(names), std::move(marginals), std::move(dep));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("InputSpec: malformed JSON document: ") + e.what());
  }
}

}  // namespace senskit
