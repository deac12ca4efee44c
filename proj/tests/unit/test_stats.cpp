#include <gtest/gtest.h>

#include <cmath>

#include "cinf/rng.hpp"
#include "cinf/stats.hpp"
#include "oracles.hpp"

using namespace cinf;

TEST(ChiSquare, QuantilesAgainstIntegration) {
  EXPECT_NEAR(chi_square_sf(3.841, 1), 0.05, 1e-3);
  EXPECT_NEAR(chi_square_sf(6.635, 1), 0.01, 1e-3);
  for (double x : {0.01, 0.5, 1.0, 2.7, 3.841, 6.635, 10.0, 20.0})
    EXPECT_NEAR(chi_square_sf(x, 1), oracle::chi_square1_sf(x), 1e-8) << x;
  EXPECT_EQ(chi_square_sf(0.0, 1), 1.0);
}

TEST(ChiSquare, HigherDegreesOfFreedom) {
  // df = 2 has survival exp(-x/2).
  for (double x : {0.3, 2.0, 9.0}) EXPECT_NEAR(chi_square_sf(x, 2), std::exp(-x / 2), 1e-12);
}

TEST(PairedT, DegenerateRejected) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_THROW(paired_t_test(x, x), DataError);
}

TEST(PairedT, KnownValue) {
  // differences 1, 2, 3, 4: mean 2.5, sd sqrt(5/3), t = 2.5 / (sd / 2)
  const std::vector<double> x{2, 4, 6, 8}, y{1, 2, 3, 4};
  const auto r = paired_t_test(x, y);
  EXPECT_NEAR(r.t, 2.5 / (std::sqrt(5.0 / 3.0) / 2.0), 1e-12);
  EXPECT_EQ(r.df, 3.0);
  // two-sided t(3) at 3.8730 ~ 0.0305
  EXPECT_NEAR(r.p_value, 0.0305, 5e-4);
}

TEST(Ks, UniformAndShifted) {
  SeedStream r(3, 3);
  std::vector<double> u(500), v(500);
  for (auto& x : u) x = r.uniform();
  for (auto& x : v) x = 0.5 * r.uniform();
  EXPECT_GT(ks_uniform(u).p_value, 0.01);
  EXPECT_LT(ks_uniform(v).p_value, 1e-6);
}

TEST(Spearman, MonotoneAndTies) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{2, 4, 8, 16, 32}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{5, 4, 3, 2, 1}), -1.0);
  const auto r = average_ranks(std::vector<double>{3, 1, 3, 2});
  EXPECT_EQ(r, (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(Rejection, Rate) {
  EXPECT_DOUBLE_EQ(rejection_rate(std::vector<double>{0.01, 0.2, 0.04, 0.05}, 0.05), 0.75);
}
