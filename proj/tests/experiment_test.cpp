#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "mktlab/experiment.hpp"

namespace mktlab {
namespace {

constexpr double kPhi = 0.25249969640914601;
constexpr double kPhiT = 0.28563265301183747;

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

TEST(BuildMarket, CustomerRandomizedSplitsCustomers) {
  const auto m = build_experiment_market(MarketSpec::homogeneous(kPhi, kPhiT, 1.0),
                                         DesignSpec::cr(0.5), 10);
  EXPECT_EQ(m.n_listings, 10);
  EXPECT_EQ(m.listing_counts, (std::vector<std::int64_t>{10}));
  EXPECT_EQ(m.customer_counts, (std::vector<std::int64_t>{5, 5}));
  EXPECT_EQ(m.customer_arm, (std::vector<Arm>{Arm::control, Arm::treatment}));
  EXPECT_DOUBLE_EQ(m.consider_prob(0, 0), kPhi / 10);
  EXPECT_DOUBLE_EQ(m.consider_prob(1, 0), kPhiT / 10);
}

TEST(BuildMarket, ListingRandomizedSplitsListings) {
  const auto m = build_experiment_market(MarketSpec::homogeneous(kPhi, kPhiT, 1.0),
                                         DesignSpec::lr(0.3), 10);
  EXPECT_EQ(m.listing_counts, (std::vector<std::int64_t>{7, 3}));
  EXPECT_EQ(m.listing_arm, (std::vector<Arm>{Arm::control, Arm::treatment}));
  EXPECT_EQ(m.customer_counts, (std::vector<std::int64_t>{10}));
  EXPECT_DOUBLE_EQ(m.consider_prob(0, 0), kPhi / 10);
  EXPECT_DOUBLE_EQ(m.consider_prob(0, 1), kPhiT / 10);
}

TEST(BuildMarket, LargestRemainderApportioning) {
  MarketSpec spec;
  spec.customer_types = {"a", "b"};
  spec.listing_types = {"x", "y"};
  spec.sigma = {0.25, 0.75};
  spec.tau = {0.33, 0.67};
  spec.lambda = 1.5;
  spec.phi_control = Matrix{{0.2, 0.3}, {0.4, 0.1}};
  spec.phi_treatment = Matrix{{0.25, 0.3}, {0.5, 0.1}};
  const auto m = build_experiment_market(spec, DesignSpec::global_control(), 10);
  EXPECT_EQ(m.listing_counts, (std::vector<std::int64_t>{3, 7}));
  EXPECT_EQ(m.customer_counts, (std::vector<std::int64_t>{4, 11}));
  EXPECT_DOUBLE_EQ(m.consider_prob(1, 0), 0.04);
}

TEST(BuildMarket, ClipsProbabilityAtOne) {
  const auto m = build_experiment_market(MarketSpec::homogeneous(5.0, 5.0, 1.0),
                                         DesignSpec::global_treatment(), 2);
  EXPECT_EQ(m.consider_prob(0, 0), 1.0);
}

TEST(BuildMarket, EmptyGroupIsAnError) {
  const auto spec = MarketSpec::homogeneous(kPhi, kPhiT, 1.0);
  EXPECT_THROW(build_experiment_market(spec, DesignSpec::cr(0.05), 10), std::domain_error);
  EXPECT_THROW(build_experiment_market(spec, DesignSpec::lr(0.05), 10), std::domain_error);
  EXPECT_THROW(build_experiment_market(spec, DesignSpec::cr(0.5), 0), std::domain_error);
  EXPECT_THROW(build_experiment_market(MarketSpec::homogeneous(kPhi, kPhiT, 0.05),
                                       DesignSpec::global_control(), 10),
               std::domain_error);
}

TEST(Estimate, DifferenceInMeans) {
  FiniteMarket cr;
  cr.n_listings = 10;
  cr.listing_counts = {10};
  cr.customer_counts = {11, 10};
  cr.customer_arm = {Arm::control, Arm::treatment};
  cr.consider_prob = Matrix(2, 1, 0.1);
  BookingTally t{{9}, {4, 5}, 9};
  // (21/10) * (5/10 - 4/11)
  EXPECT_NEAR(estimate(t, DesignSpec::cr(0.5), cr), 2.1 * (0.5 - 4.0 / 11), 1e-15);

  FiniteMarket lr;
  lr.n_listings = 10;
  lr.listing_counts = {7, 3};
  lr.listing_arm = {Arm::control, Arm::treatment};
  lr.customer_counts = {10};
  lr.consider_prob = Matrix(1, 2, 0.1);
  BookingTally u{{2, 1}, {3}, 3};
  EXPECT_NEAR(estimate(u, DesignSpec::lr(0.3), lr), 1.0 / 3 - 2.0 / 7, 1e-15);
  EXPECT_DOUBLE_EQ(estimate(u, DesignSpec::global_control(), lr), 0.3);
}

TEST(Summarize, MomentsAndMseIdentity) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto s = summarize(x, 2.0, 100);
  const double var = 5.0 / 3;
  EXPECT_EQ(s.replications, 4);
  EXPECT_DOUBLE_EQ(s.estimator_mean, 2.5);
  EXPECT_NEAR(s.estimator_sd, std::sqrt(var), 1e-15);
  EXPECT_NEAR(s.std_error, std::sqrt(var) / 2, 1e-15);
  EXPECT_NEAR(s.half_width, 1.959963984540054 * std::sqrt(var) / 2, 1e-15);
  EXPECT_DOUBLE_EQ(s.bias, 0.5);
  EXPECT_NEAR(*s.relative_bias, 0.25, 1e-15);
  EXPECT_NEAR(s.mse, s.bias * s.bias + s.estimator_sd * s.estimator_sd, 1e-12);
  EXPECT_NEAR(s.scaled_variance, 100 * var, 1e-12);
  EXPECT_FALSE(summarize(x, 0.0, 100).relative_bias.has_value());
  EXPECT_THROW(summarize(std::span<const double>(x.data(), 1), 0.0, 100), std::invalid_argument);
}

TEST(Replications, SeedDeterminismAndThreadIndependence) {
  const auto spec = MarketSpec::homogeneous(kPhi, kPhiT, 1.0);
  const auto design = DesignSpec::cr(0.5);
  const auto market = build_experiment_market(spec, design, 5000);
  const auto one = replicate_estimates(market, design, 0, 24, 42, 1);
  const auto four = replicate_estimates(market, design, 0, 24, 42, 4);
  ASSERT_EQ(one.size(), 24u);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_TRUE(bitwise_equal(one[i], four[i]));

  const auto tail = replicate_estimates(market, design, 10, 14, 42, 3);
  for (std::size_t i = 0; i < tail.size(); ++i) EXPECT_TRUE(bitwise_equal(tail[i], one[10 + i]));

  EXPECT_NE(replicate_estimates(market, design, 0, 24, 43, 1), one);

  const auto a = run_replications(spec, design, 5000, 24, 7, {GteReference::analytic, 1});
  const auto b = run_replications(spec, design, 5000, 24, 7, {GteReference::analytic, 5});
  EXPECT_TRUE(bitwise_equal(a.estimator_mean, b.estimator_mean));
  EXPECT_TRUE(bitwise_equal(a.estimator_sd, b.estimator_sd));
  EXPECT_TRUE(bitwise_equal(a.mse, b.mse));
  EXPECT_THROW(run_replications(spec, design, 5000, 1, 7), std::invalid_argument);
}

TEST(Replications, NullInterventionIsUnbiased) {
  const auto spec = MarketSpec::homogeneous(0.4, 0.4, 1.3);
  for (const auto& design : {DesignSpec::cr(0.5), DesignSpec::lr(0.3)}) {
    const auto s = run_replications(spec, design, 2000, 400, 11);
    EXPECT_EQ(s.gte_reference, 0.0);
    EXPECT_LT(std::abs(s.bias), 4 * s.estimator_sd / std::sqrt(400.0)) << to_string(design.kind);
  }
}

TEST(Replications, UpwardEffectBiasesBothDesignsUp) {
  const auto spec = MarketSpec::homogeneous(kPhi, 1.2 * kPhi, 1.0);
  for (const auto& design : {DesignSpec::cr(0.5), DesignSpec::lr(0.5)}) {
    const auto s = run_replications(spec, design, 100000, 200, 3);
    EXPECT_GT(s.bias / s.std_error, 3.0) << to_string(design.kind);
    EXPECT_NEAR(s.estimator_mean, asymptotic_bias(spec, design).estimator_limit,
                4 * s.std_error);
  }
}

TEST(Replications, MonteCarloGteTracksLimit) {
  const auto spec = MarketSpec::homogeneous(kPhi, kPhiT, 1.0);
  EXPECT_NEAR(monte_carlo_gte(spec, 10000, 100, 5), 0.02, 3e-3);
  const auto s =
      run_replications(spec, DesignSpec::lr(0.5), 10000, 50, 5, {GteReference::monte_carlo, 0});
  EXPECT_NE(s.gte_reference, gte_limit(spec));
  EXPECT_NEAR(s.gte_reference, 0.02, 3e-3);
}

}  // namespace
}  // namespace mktlab
