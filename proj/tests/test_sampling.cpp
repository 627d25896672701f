#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "senskit/errors.hpp"
#include "senskit/sampling.hpp"

using namespace senskit;

TEST_CASE("mc_sample basic contracts") {
  CHECK(mc_sample(0, 3, 1).points.rows() == 0);
  const UnitDesign a = mc_sample(50, 4, 123);
  const UnitDesign b = mc_sample(50, 4, 123);
  CHECK(a.points == b.points);  // determinism
  const UnitDesign c = mc_sample(50, 4, 124);
  CHECK(a.points != c.points);
  CHECK((a.points.array() >= 0.0).all());
  CHECK((a.points.array() < 1.0).all());
  CHECK_THROWS_AS(mc_sample(1, 0, 0), InputError);
}

TEST_CASE("mc_sample column means match the uniform expectation") {
  const int n = 100000;
  const UnitDesign u = mc_sample(n, 2, 99);
  // Standard error of the mean of U(0,1) is 1/sqrt(12 n) ~ 0.0009.
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(u.points.col(j).mean() - 0.5) < 0.01);
  }
}

TEST_CASE("lhs_sample stratification") {
  const UnitDesign single = lhs_sample(1, 3, 5);
  CHECK((single.points.array() >= 0.0).all());
  CHECK((single.points.array() < 1.0).all());

  const UnitDesign four = lhs_sample(4, 1, 11);
  std::vector<double> sorted(four.points.col(0).begin(), four.points.col(0).end());
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < 4; ++k) {
    CHECK(sorted[static_cast<std::size_t>(k)] >= k / 4.0);
    CHECK(sorted[static_cast<std::size_t>(k)] < (k + 1) / 4.0);
  }

  const int n = 100;
  const UnitDesign u = lhs_sample(n, 2, 77);
  for (int j = 0; j < 2; ++j) {
    std::vector<int> occupancy(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      ++occupancy[static_cast<std::size_t>(static_cast<int>(u.points(i, j) * n))];
    }
    CHECK(std::all_of(occupancy.begin(), occupancy.end(), [](int c) { return c == 1; }));
  }
  CHECK(lhs_sample(n, 2, 77).points == u.points);
}

TEST_CASE("sobol_sequence first points and frozen reference rows") {
  CHECK(sobol_sequence(0, 3).points.rows() == 0);
  const UnitDesign one = sobol_sequence(1, 7);
  CHECK((one.points.array() == 0.5).all());

  const UnitDesign five = sobol_sequence(5, 1);
  const double expect5[] = {0.5, 0.75, 0.25, 0.375, 0.875};
  for (int i = 0; i < 5; ++i) CHECK(five.points(i, 0) == expect5[i]);

  // Frozen from the Joe-Kuo reference implementation (d = 8, first 9 points).
  const double ref[9][8] = {
      {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5},
      {0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75},
      {0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25},
      {0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875},
      {0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375},
      {0.625, 0.125, 0.875, 0.625, 0.625, 0.875, 0.125, 0.125},
      {0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625},
      {0.1875, 0.3125, 0.9375, 0.4375, 0.5625, 0.3125, 0.4375, 0.9375},
      {0.6875, 0.8125, 0.4375, 0.9375, 0.0625, 0.8125, 0.9375, 0.4375},
  };
  const UnitDesign d8 = sobol_sequence(9, 8);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 8; ++j) {
      CHECK(d8.points(i, j) == doctest::Approx(ref[i][j]).epsilon(1e-15));
    }
  }
}

TEST_CASE("sobol_sequence prefix property and dimension guard") {
  const UnitDesign small = sobol_sequence(33, 6);
  const UnitDesign large = sobol_sequence(34, 6);
  CHECK(small.points == large.points.topRows(33));

  CHECK(sobol_max_dimension() >= 50);
  const UnitDesign wide = sobol_sequence(64, 50);
  CHECK((wide.points.array() >= 0.0).all());
  CHECK((wide.points.array() < 1.0).all());
  CHECK_THROWS_AS(sobol_sequence(4, sobol_max_dimension() + 1), InputError);
}

TEST_CASE("sobol_sequence dyadic stratification on aligned blocks") {
  // The emitted sequence skips the origin, so the aligned block of size 2^k
  // is the origin plus the first 2^k - 1 emitted points. Brute-force stratum
  // occupancy per axis.
  for (int k : {2, 4, 6}) {
    const int n = 1 << k;
    const UnitDesign u = sobol_sequence(n - 1, 2);
    for (int j = 0; j < 2; ++j) {
      std::vector<int> occupancy(static_cast<std::size_t>(n), 0);
      ++occupancy[0];  // implicit origin point
      for (int i = 0; i < n - 1; ++i) {
        ++occupancy[static_cast<std::size_t>(static_cast<int>(u.points(i, j) * n))];
      }
      CHECK(std::all_of(occupancy.begin(), occupancy.end(), [](int c) { return c == 1; }));
    }
  }
}

TEST_CASE("l2_star_discrepancy single-point analytic values") {
  UnitDesign at_zero{Eigen::MatrixXd::Zero(1, 1), Generator::MC, 0};
  CHECK(l2_star_discrepancy(at_zero) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
  UnitDesign at_half{Eigen::MatrixXd::Constant(1, 1, 0.5), Generator::MC, 0};
  CHECK(l2_star_discrepancy(at_half) ==
        doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-12));
  CHECK(l2_star_discrepancy(at_half) == doctest::Approx(0.288675).epsilon(1e-5));
}

TEST_CASE("Warnock closed form matches MC integration of the definition") {
  for (unsigned trial = 0; trial < 3; ++trial) {
    const UnitDesign u = mc_sample(100, 2, 1000 + trial);
    const double closed = l2_star_discrepancy(u);
    const auto mc = oracles::l2_star_discrepancy_sq_mc(u.points, 200000, 17 + trial);
    CHECK(std::abs(closed * closed - mc.value) < 3.0 * mc.std_error);
  }
}

TEST_CASE("mean discrepancy orders sobol < lhs < mc over seeds") {
  const int n_seeds = 50;
  const double d2_sobol = l2_star_discrepancy(sobol_sequence(100, 2));
  double sum_mc = 0.0, sum_lhs = 0.0;
  int lhs_below_mc = 0, sobol_below_lhs = 0, full_order = 0;
  for (int s = 0; s < n_seeds; ++s) {
    const double d2_mc = l2_star_discrepancy(mc_sample(100, 2, 3000 + s));
    const double d2_lhs = l2_star_discrepancy(lhs_sample(100, 2, 3000 + s));
    sum_mc += d2_mc;
    sum_lhs += d2_lhs;
    if (d2_lhs < d2_mc) ++lhs_below_mc;
    if (d2_sobol < d2_lhs) ++sobol_below_lhs;
    if (d2_sobol < d2_lhs && d2_lhs < d2_mc) ++full_order;
  }
  CHECK(d2_sobol < sum_lhs / n_seeds);
  CHECK(sum_lhs / n_seeds < sum_mc / n_seeds);
  CHECK(lhs_below_mc >= 45);
  CHECK(sobol_below_lhs >= 45);
  CHECK(full_order >= 45);
}

TEST_CASE("design CSV export format") {
  Eigen::MatrixXd pts(2, 2);
  pts << 0.1234567890123456789, 0.5, 1.0 / 3.0, 0.25;
  std::ostringstream os;
  write_design_csv(os, pts, {"a", "b"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "a,b");
  std::getline(is, line);
  // 17 significant digits round-trip doubles exactly.
  const double parsed = std::stod(line.substr(0, line.find(',')));
  CHECK(parsed == pts(0, 0));

  std::ostringstream os2;
  write_design_csv(os2, pts, {});
  std::istringstream is2(os2.str());
  std::getline(is2, line);
  CHECK(line == "x1,x2");
}
