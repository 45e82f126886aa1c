#include <gtest/gtest.h>

#include "dform/suites.hpp"

using namespace dform;

TEST(Suites, FinishRates) {
  RateResult r;
  r.residuals = {1e-2, 2.5e-3, 6.25e-4};
  finish_rates(r, 1.8, 1e-9);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.exact);
  EXPECT_NEAR(r.rates[1], 2.0, 1e-12);
  r.residuals = {1e-2, 5e-3, 2.5e-3};
  finish_rates(r, 1.8, 1e-9);
  EXPECT_FALSE(r.pass);
  r.residuals = {1e-14, 3e-14, 2e-14};
  finish_rates(r, 1.8, 1e-9);
  EXPECT_TRUE(r.exact);
  EXPECT_TRUE(r.pass);
}

TEST(Suites, IdentitySuiteSmallGrids) {
  for (double kappa : {-1.0, 0.0, 1.0}) {
    const IdentitySuite s = run_identity_suite(kappa, 2, {17, 33}, 7);
    EXPECT_TRUE(s.pass) << "kappa=" << kappa;
    for (const auto& f : s.failures()) ADD_FAILURE() << f;
  }
}

TEST(Suites, Arguments) {
  EXPECT_THROW(run_identity_suite(0.0, 4, {9, 17}, 1), Error);
  EXPECT_THROW(run_identity_suite(0.0, 2, {17}, 1), Error);
  EXPECT_EQ(default_levels(2, 3), (std::vector<int>{17, 33, 65}));
  EXPECT_EQ(default_levels(3, 2), (std::vector<int>{9, 17}));
}
