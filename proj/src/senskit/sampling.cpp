#include "senskit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "senskit/errors.hpp"
#include "senskit/rng.hpp"
#include "sobol_directions.hpp"

namespace senskit {

std::string generator_name(Generator g) {
  switch (g) {
    case Generator::MC: return "mc";
    case Generator::LHS: return "lhs";
    case Generator::SobolSeq: return "sobol";
  }
  return "mc";
}

Generator generator_from_name(const std::string& name) {
  if (name == "mc") return Generator::MC;
  if (name == "lhs") return Generator::LHS;
  if (name == "sobol") return Generator::SobolSeq;
  throw InputError("unknown sampler '" + name + "' (expected mc, lhs or sobol)");
}

UnitDesign mc_sample(int n, int d, std::uint64_t seed) {
  if (n < 0 || d < 1) throw InputError("mc_sample: need n >= 0 and d >= 1");
  CounterRng rng(seed);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      // Open-interval deviates so Gaussian quantile scaling stays finite.
      pts(i, j) = rng.uniform_open(static_cast<std::uint64_t>(i) * d + j);
    }
  }
  return {std::move(pts), Generator::MC, seed};
}

UnitDesign lhs_sample(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InputError("lhs_sample: need n >= 1 and d >= 1");
  Eigen::MatrixXd pts(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    // Fisher-Yates permutation of the strata, stream 2j; offsets stream 2j+1.
    SequentialRng shuffle(seed, 2 * static_cast<std::uint64_t>(j));
    CounterRng offset(seed, 2 * static_cast<std::uint64_t>(j) + 1);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const auto k = static_cast<int>(shuffle.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[k]);
    }
    for (int i = 0; i < n; ++i) {
      pts(i, j) = (perm[i] + offset.uniform_open(i)) / static_cast<double>(n);
    }
  }
  return {std::move(pts), Generator::LHS, seed};
}

int sobol_max_dimension() { return detail::kSobolMaxDim; }

UnitDesign sobol_sequence(int n, int d) {
  if (n < 0 || d < 1) throw InputError("sobol_sequence: need n >= 0 and d >= 1");
  if (d > detail::kSobolMaxDim) {
    throw InputError("sobol_sequence: dimension " + std::to_string(d) +
                     " exceeds the embedded direction-number table (" +
                     std::to_string(detail::kSobolMaxDim) + ")");
  }
  constexpr int kBits = 52;  // exact as doubles
  // Direction integers v[j][k], k = 1..kBits, from the Joe-Kuo recurrence.
  std::vector<std::array<std::uint64_t, kBits + 1>> v(d);
  for (int j = 0; j < d; ++j) {
    const auto& e = detail::kJoeKuoD6[j];
    std::uint32_t m[kBits];
    if (e.degree == 0) {
      for (int k = 0; k < kBits; ++k) m[k] = 1;  // first dimension: van der Corput
    } else {
      const int s = static_cast<int>(e.degree);
      for (int k = 0; k < s; ++k) m[k] = e.m[k];
      for (int k = s; k < kBits; ++k) {
        std::uint32_t x = m[k - s] ^ (m[k - s] << s);
        for (int q = 1; q < s; ++q) {
          if ((e.coeffs >> (s - 1 - q)) & 1u) x ^= m[k - q] << q;
        }
        m[k] = x;
      }
    }
    for (int k = 1; k <= kBits; ++k) {
      v[j][k] = static_cast<std::uint64_t>(m[k - 1]) << (kBits - k);
    }
  }

  Eigen::MatrixXd pts(n, d);
  std::vector<std::uint64_t> x(d, 0);
  constexpr double scale = 1.0 / static_cast<double>(std::uint64_t{1} << kBits);
  for (int i = 0; i < n; ++i) {
    // x_{i+1} = x_i xor v_c, c = index of the lowest zero bit of i. Starting
    // from the implicit x_0 = 0, this emits the sequence with the zero point
    // skipped.
    int c = 1;
    for (std::uint64_t ii = static_cast<std::uint64_t>(i); ii & 1u; ii >>= 1) ++c;
    for (int j = 0; j < d; ++j) {
      x[j] ^= v[j][c];
      pts(i, j) = static_cast<double>(x[j]) * scale;
    }
  }
  return {std::move(pts), Generator::SobolSeq, 0};
}

double l2_star_discrepancy(const UnitDesign& design) {
  const int n = design.n();
  const int d = design.d();
  if (n < 1) throw InputError("l2_star_discrepancy: need at least one point");
  const Eigen::MatrixXd& a = design.points;

  // D2^2 = 3^-d - (2/N) sum_i prod_j (1 - a_ij^2)/2
  //       + (1/N^2) sum_{i,k} prod_j (1 - max(a_ij, a_kj)).
  double cross = 0.0;
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < d; ++j) p *= 0.5 * (1.0 - a(i, j) * a(i, j));
    cross += p;
  }
  double pair = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      double p = 1.0;
      for (int j = 0; j < d; ++j) p *= 1.0 - std::max(a(i, j), a(k, j));
      pair += p;
    }
  }
  const double d2sq = std::pow(3.0, -d) - 2.0 / n * cross + pair / (static_cast<double>(n) * n);
  return std::sqrt(std::max(d2sq, 0.0));
}

void write_design_csv(std::ostream& os, const Eigen::MatrixXd& points,
                      const std::vector<std::string>& names) {
  const auto d = points.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j) os << ',';
    if (j < static_cast<Eigen::Index>(names.size())) {
      os << names[j];
    } else {
      os << 'x' << (j + 1);
    }
  }
  os << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (j) os << ',';
      std::snprintf(buf, sizeof buf, "%.17g", points(i, j));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace senskit
