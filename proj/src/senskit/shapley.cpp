#include "senskit/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "senskit/errors.hpp"
#include "senskit/rng.hpp"
#include "senskit/sampling.hpp"

namespace senskit {

namespace {

void check_game(const GameSpec& game, int max_d) {
  if (game.d < 1) throw InputError("shapley: need at least one player");
  if (game.d > max_d) {
    throw InputError("shapley: d = " + std::to_string(game.d) +
                     " exceeds the enumeration guard (" + std::to_string(max_d) + ")");
  }
  if (!game.nu) throw InputError("shapley: game has no characteristic function");
  if (std::abs(game.nu(0u)) != 0.0) {
    throw InputError("shapley: nu(empty set) must be 0");
  }
}

// |J|!(d-|J|-1)!/d! = 1 / (d * binom(d-1, |J|)), exact in double for d <= 20.
double subset_weight(int d, int j) {
  double binom = 1.0;
  for (int k = 0; k < j; ++k) binom = binom * (d - 1 - k) / (k + 1);
  return 1.0 / (d * binom);
}

}  // namespace

GameSpec game_from_table(int d, std::vector<double> payoff_by_mask) {
  if (d < 1 || d > 20) throw InputError("game_from_table: need 1 <= d <= 20");
  if (payoff_by_mask.size() != (std::size_t{1} << d)) {
    throw InputError("game_from_table: payoff table must have 2^d entries");
  }
  auto table = std::make_shared<std::vector<double>>(std::move(payoff_by_mask));
  return {d, [table](std::uint32_t mask) { return (*table)[mask]; }};
}

Eigen::VectorXd exact_shapley(const GameSpec& game) {
  check_game(game, 20);
  const int d = game.d;
  std::vector<double> weight(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) weight[static_cast<std::size_t>(j)] = subset_weight(d, j);

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(d);
  const std::uint32_t full = (1u << d) - 1u;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    const double nu_mask = game.nu(mask);
    for (int i = 0; i < d; ++i) {
      const std::uint32_t bit = 1u << i;
      if (mask & bit) continue;
      phi(i) += weight[static_cast<std::size_t>(std::popcount(mask))] *
                (game.nu(mask | bit) - nu_mask);
    }
  }
  return phi;
}

Eigen::VectorXd permutation_shapley(const GameSpec& game) {
  check_game(game, 9);
  return castro_shapley(game, all_permutations(game.d));
}

Eigen::VectorXd castro_shapley(const GameSpec& game,
                               const std::vector<std::vector<int>>& permutations) {
  check_game(game, 20);
  if (permutations.empty()) throw InputError("castro_shapley: need at least one permutation");
  const int d = game.d;
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(d);
  for (const auto& perm : permutations) {
    if (static_cast<int>(perm.size()) != d) {
      throw InputError("castro_shapley: permutation length does not match d");
    }
    std::uint32_t mask = 0;
    double prev = 0.0;  // nu(empty)
    for (int k = 0; k < d; ++k) {
      mask |= 1u << perm[static_cast<std::size_t>(k)];
      const double cur = game.nu(mask);
      phi(perm[static_cast<std::size_t>(k)]) += cur - prev;
      prev = cur;
    }
  }
  return phi / static_cast<double>(permutations.size());
}

std::vector<std::vector<int>> all_permutations(int d) {
  if (d < 1 || d > 9) throw InputError("all_permutations: need 1 <= d <= 9");
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<std::vector<int>> sample_permutations(int d, int m, std::uint64_t seed) {
  if (d < 1 || m < 1) throw InputError("sample_permutations: need d >= 1 and m >= 1");
  std::vector<std::vector<int>> out(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) {
    SequentialRng rng(seed, static_cast<std::uint64_t>(p));
    auto& perm = out[static_cast<std::size_t>(p)];
    perm.resize(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = d - 1; i > 0; --i) {
      const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

namespace {

// Conditional sampling machinery for one subset I (players to vary) given its
// complement. Covariance pieces depend only on the index split, so they are
// prepared once per subset and reused across outer draws.
class SubsetSampler {
 public:
  SubsetSampler(const InputSpec& spec, const std::vector<int>& subset)
      : spec_(spec), inner_(subset) {
    // Conditional blocks from condition_gaussian run over ascending original
    // indices; keep the inner list in the same order.
    std::sort(inner_.begin(), inner_.end());
    if (std::adjacent_find(inner_.begin(), inner_.end()) != inner_.end()) {
      throw InputError("nu2_estimate: duplicate indices in subset");
    }
    const int d = spec.dimension();
    std::vector<bool> in_subset(static_cast<std::size_t>(d), false);
    for (int j : inner_) in_subset[static_cast<std::size_t>(j)] = true;
    for (int j = 0; j < d; ++j) {
      if (!in_subset[static_cast<std::size_t>(j)]) outer_.push_back(j);
    }
    if (spec.dependence()) {
      const auto& dep = *spec.dependence();
      const int no = static_cast<int>(outer_.size());
      Eigen::MatrixXd cov_oo(no, no);
      mu_o_.resize(no);
      for (int r = 0; r < no; ++r) {
        mu_o_(r) = dep.mean()(outer_[static_cast<std::size_t>(r)]);
        for (int c = 0; c < no; ++c) {
          cov_oo(r, c) = dep.cov()(outer_[static_cast<std::size_t>(r)],
                                   outer_[static_cast<std::size_t>(c)]);
        }
      }
      chol_oo_ = psd_cholesky(cov_oo);
      // Conditional covariance of X_I given the complement is constant; pull
      // its Cholesky factor and the regression weights from one conditioning.
      const GaussianDependence cond =
          condition_gaussian(dep, outer_, mu_o_);  // conditioned at the mean
      chol_cond_ = cond.chol();
      const int ni = static_cast<int>(inner_.size());
      Eigen::MatrixXd cov_io(ni, no);
      mu_i_.resize(ni);
      for (int r = 0; r < ni; ++r) {
        mu_i_(r) = dep.mean()(inner_[static_cast<std::size_t>(r)]);
        for (int c = 0; c < no; ++c) {
          cov_io(r, c) = dep.cov()(inner_[static_cast<std::size_t>(r)],
                                   outer_[static_cast<std::size_t>(c)]);
        }
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_oo);
      if (ldlt.info() != Eigen::Success ||
          ldlt.vectorD().minCoeff() <= 1e-12 * cov_oo.diagonal().maxCoeff()) {
        throw DegeneracyError("nu2_estimate: complement covariance block is singular");
      }
      regression_ = ldlt.solve(cov_io.transpose()).transpose();
    }
  }

  const std::vector<int>& outer_idx() const { return outer_; }
  const std::vector<int>& inner_idx() const { return inner_; }

  // Draws the complement X_~I into x (full-length row), consuming uniforms.
  void draw_outer(SequentialRng& rng, Eigen::RowVectorXd& x) const {
    if (spec_.dependence()) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(outer_.size()));
      for (Eigen::Index k = 0; k < z.size(); ++k) {
        z(k) = standard_normal_quantile(rng.uniform_open());
      }
      const Eigen::VectorXd xo = mu_o_ + chol_oo_ * z;
      for (std::size_t k = 0; k < outer_.size(); ++k) {
        x(outer_[k]) = xo(static_cast<Eigen::Index>(k));
      }
    } else {
      for (int j : outer_) {
        x(j) = inverse_cdf(spec_.marginals()[static_cast<std::size_t>(j)], rng.uniform_open());
      }
    }
  }

  // Draws X_I conditional on the complement values already in x.
  void draw_inner(SequentialRng& rng, Eigen::RowVectorXd& x) const {
    if (spec_.dependence()) {
      Eigen::VectorXd xo(static_cast<Eigen::Index>(outer_.size()));
      for (std::size_t k = 0; k < outer_.size(); ++k) {
        xo(static_cast<Eigen::Index>(k)) = x(outer_[k]);
      }
      Eigen::VectorXd z(static_cast<Eigen::Index>(inner_.size()));
      for (Eigen::Index k = 0; k < z.size(); ++k) {
        z(k) = standard_normal_quantile(rng.uniform_open());
      }
      const Eigen::VectorXd xi = mu_i_ + regression_ * (xo - mu_o_) + chol_cond_ * z;
      for (std::size_t k = 0; k < inner_.size(); ++k) {
        x(inner_[k]) = xi(static_cast<Eigen::Index>(k));
      }
    } else {
      for (int j : inner_) {
        x(j) = inverse_cdf(spec_.marginals()[static_cast<std::size_t>(j)], rng.uniform_open());
      }
    }
  }

 private:
  const InputSpec& spec_;
  std::vector<int> inner_;
  std::vector<int> outer_;
  Eigen::VectorXd mu_o_, mu_i_;
  Eigen::MatrixXd chol_oo_;
  Eigen::MatrixXd chol_cond_;
  Eigen::MatrixXd regression_;
};

double nu2_core(const ModelFn& model, const InputSpec& spec, const SubsetSampler& sampler,
                int n_outer, int n_inner, double v_y, std::uint64_t seed,
                std::uint64_t stream) {
  const int d = spec.dimension();
  SequentialRng rng(seed, stream);
  Eigen::RowVectorXd x(d);
  Eigen::MatrixXd batch(n_inner, d);
  double acc = 0.0;
  for (int t = 0; t < n_outer; ++t) {
    sampler.draw_outer(rng, x);
    for (int s = 0; s < n_inner; ++s) {
      sampler.draw_inner(rng, x);
      batch.row(s) = x;
    }
    const Eigen::VectorXd y = model(batch);
    if (y.size() != n_inner) {
      throw InputError("nu2_estimate: model returned wrong response count");
    }
    const double mean = y.mean();
    acc += (y.array() - mean).square().sum() / (n_inner - 1);
  }
  return acc / n_outer / v_y;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t which) {
  return CounterRng(seed, which).bits(0);
}

}  // namespace

double nu2_estimate(const ModelFn& model, const InputSpec& spec,
                    const std::vector<int>& subset, const ShapleyConfig& cfg,
                    double v_y) {
  const int d = spec.dimension();
  if (subset.empty() || static_cast<int>(subset.size()) >= d) {
    throw InputError("nu2_estimate: subset must be a nonempty proper subset");
  }
  for (int j : subset) {
    if (j < 0 || j >= d) throw InputError("nu2_estimate: subset index out of range");
  }
  if (cfg.n_inner < 2) {
    throw InputError("nu2_estimate: unbiased conditional variance needs n_inner >= 2");
  }
  if (cfg.n_outer < 1) throw InputError("nu2_estimate: need n_outer >= 1");
  if (!(v_y > 0.0)) throw DegeneracyError("nu2_estimate: v_y must be positive");
  SubsetSampler sampler(spec, subset);
  return nu2_core(model, spec, sampler, cfg.n_outer, cfg.n_inner, v_y, cfg.seed, 0);
}

ShapleyEstimate estimate_shapley(const ModelFn& model, const InputSpec& spec,
                                 const ShapleyConfig& cfg) {
  const int d = spec.dimension();
  if (d > 25) throw InputError("estimate_shapley: coalition masks support at most d = 25");
  if (cfg.m_permutations < 1 || cfg.n_outer < 1 || cfg.n_var < 2) {
    throw InputError("estimate_shapley: configuration counts must be positive (n_var >= 2)");
  }
  if (cfg.n_inner < 2) {
    throw InputError("estimate_shapley: unbiased conditional variance needs n_inner >= 2");
  }

  // Common V(Y) normalizer from unconditional runs.
  const UnitDesign u = mc_sample(cfg.n_var, d, derived_seed(cfg.seed, 1));
  const Eigen::MatrixXd x_var = scale_design(u.points, spec);
  const Eigen::VectorXd y_var = model(x_var);
  const double mean = y_var.mean();
  const double v_y = (y_var.array() - mean).square().sum() / (cfg.n_var - 1);
  if (!(v_y > 0.0)) {
    throw DegeneracyError("estimate_shapley: estimated output variance is zero");
  }

  // Samplers for prefix subsets are cached per distinct coalition mask.
  std::unordered_map<std::uint32_t, std::unique_ptr<SubsetSampler>> samplers;
  const auto sampler_for = [&](std::uint32_t mask,
                               const std::vector<int>& members) -> SubsetSampler& {
    auto& slot = samplers[mask];
    if (!slot) slot = std::make_unique<SubsetSampler>(spec, members);
    return *slot;
  };

  const int m = cfg.m_permutations;
  const auto permutations = sample_permutations(d, m, derived_seed(cfg.seed, 2));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(d);
  std::vector<int> members;
  for (int p = 0; p < m; ++p) {
    const auto& perm = permutations[static_cast<std::size_t>(p)];
    std::uint32_t mask = 0;
    members.clear();
    double prev = 0.0;  // nu2(empty) pinned
    for (int k = 0; k < d; ++k) {
      const int player = perm[static_cast<std::size_t>(k)];
      mask |= 1u << player;
      members.push_back(player);
      double cur;
      if (k == d - 1) {
        cur = 1.0;  // nu2(full) pinned: E[V(Y)] / V(Y)
      } else {
        cur = nu2_core(model, spec, sampler_for(mask, members), cfg.n_outer, cfg.n_inner,
                       v_y, derived_seed(cfg.seed, 3),
                       static_cast<std::uint64_t>(p) * d + static_cast<std::uint64_t>(k));
      }
      const double delta = cur - prev;
      sum(player) += delta;
      sum_sq(player) += delta * delta;
      prev = cur;
    }
  }

  ShapleyEstimate est;
  est.phi = sum / m;
  est.std_error = Eigen::VectorXd::Zero(d);
  if (m >= 2) {
    for (int i = 0; i < d; ++i) {
      const double var = (sum_sq(i) - sum(i) * sum(i) / m) / (m - 1);
      est.std_error(i) = std::sqrt(std::max(var, 0.0) / m);
    }
  }
  est.total_variance = v_y;
  return est;
}

}  // namespace senskit
