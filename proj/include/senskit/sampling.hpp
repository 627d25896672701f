#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace senskit {

enum class Generator { MC, LHS, SobolSeq };

std::string generator_name(Generator g);
Generator generator_from_name(const std::string& name);

// A unit-cube sample set. Every entry lies in [0,1).
struct UnitDesign {
  Eigen::MatrixXd points;
  Generator generator = Generator::MC;
  std::uint64_t seed = 0;  // unused for SobolSeq

  int n() const { return static_cast<int>(points.rows()); }
  int d() const { return static_cast<int>(points.cols()); }
};

// i.i.d. uniforms from the counter-based generator; entry (i,j) depends only
// on (seed, i*d + j).
UnitDesign mc_sample(int n, int d, std::uint64_t seed);

// Latin hypercube: per column, one point per stratum [k/n, (k+1)/n) with a
// uniform within-stratum offset; column permutations are independent.
UnitDesign lhs_sample(int n, int d, std::uint64_t seed);

// First n points of the Sobol' low-discrepancy sequence (Joe-Kuo D6 direction
// numbers, Gray-code order). The initial all-zeros point is skipped, so the
// first emitted point is 0.5 in every coordinate; sobol_sequence(n, d) is a
// prefix of sobol_sequence(n+1, d).
UnitDesign sobol_sequence(int n, int d);

int sobol_max_dimension();

// L2-star discrepancy of the point set, per the anchored-box integral
// definition, evaluated with Warnock's closed-form double sum.
double l2_star_discrepancy(const UnitDesign& design);

// CSV export: header row with the given column names (falls back to x1..xd),
// one row per point, 17 significant digits.
void write_design_csv(std::ostream& os, const Eigen::MatrixXd& points,
                      const std::vector<std::string>& names);

}  // namespace senskit
