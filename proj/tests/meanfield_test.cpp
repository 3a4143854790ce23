#include "mktlab/meanfield.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace mktlab {
namespace {

// Reference values below were evaluated independently at 40 significant
// digits (mpmath) from the closed forms.
constexpr double kPhi = 0.25249969640914601;
constexpr double kPhiT = 0.28563265301183747;

MarketSpec calibrated(double lambda = 1.0) { return MarketSpec::homogeneous(kPhi, kPhiT, lambda); }

TEST(ServeProbability, KnownValues) {
  EXPECT_EQ(f_poisson_serve(0.0), 1.0);
  EXPECT_NEAR(f_poisson_serve(1.0), 0.6321205588285576784, 1e-15);
  EXPECT_NEAR(f_poisson_serve(0.2358), 0.89084543738653144, 1e-15);
}

TEST(ServeProbability, SmallArgumentsStayAccurate) {
  for (double x : {1e-12, 1e-9, 1e-7, 9.9e-7, 1e-6, 1e-5, 1e-3}) {
    const long double xl = x;
    const long double ref =
        1.0L - xl / 2 + xl * xl / 6 - xl * xl * xl / 24 + xl * xl * xl * xl / 120;
    EXPECT_NEAR(f_poisson_serve(x), static_cast<double>(ref), 1e-15) << x;
  }
}

TEST(ServeProbability, RejectsBadInput) {
  EXPECT_THROW(f_poisson_serve(-1e-9), std::domain_error);
  EXPECT_THROW(f_poisson_serve(std::numeric_limits<double>::infinity()), std::domain_error);
  EXPECT_THROW(f_poisson_serve(std::nan("")), std::domain_error);
}

TEST(ServeProbability, DerivativeMatchesCentralDifference) {
  for (double x : {1e-8, 1e-4, 5e-3, 0.0099, 0.011, 0.3, 1.0, 4.0, 30.0}) {
    const double h = std::min(std::max(1e-6, x * 1e-5), x / 2);
    const double fd = (f_poisson_serve(x + h) - f_poisson_serve(x - h)) / (2 * h);
    EXPECT_NEAR(f_poisson_serve_derivative(x), fd, 1e-7) << x;
  }
  EXPECT_EQ(f_poisson_serve_derivative(0.0), -0.5);
}

TEST(ApplicationRates, HomogeneousReducesToOneMinusExp) {
  const auto spec = MarketSpec::homogeneous(0.25249, 0.25249, 1.0);
  const Matrix psi = application_rates(spec, Arm::control);
  EXPECT_NEAR(psi(0, 0), 0.22313601855971531, 1e-15);
}

TEST(ApplicationRates, TwoListingTypes) {
  MarketSpec spec;
  spec.customer_types = {"c"};
  spec.listing_types = {"small", "large"};
  spec.sigma = {1.0};
  spec.tau = {0.4, 0.6};
  spec.lambda = 1.0;
  spec.phi_control = Matrix{{0.101, 0.354}};
  spec.phi_treatment = spec.phi_control;
  const Matrix psi = application_rates(spec, Arm::control);
  EXPECT_NEAR(psi(0, 0), 0.089244690332357393, 1e-15);
  EXPECT_NEAR(psi(0, 1), 0.31279822156093581, 1e-15);
}

TEST(ApplicationRates, ZeroRowStaysZero) {
  MarketSpec spec;
  spec.customer_types = {"idle", "active"};
  spec.listing_types = {"l"};
  spec.sigma = {0.5, 0.5};
  spec.tau = {1.0};
  spec.lambda = 2.0;
  spec.phi_control = Matrix{{0.0}, {0.4}};
  spec.phi_treatment = spec.phi_control;
  const auto rates = rate_matrices(spec, Arm::control);
  EXPECT_EQ(rates.psi(0, 0), 0.0);
  EXPECT_EQ(rates.omega(0, 0), 0.0);
  EXPECT_GT(rates.omega(1, 0), 0.0);
}

TEST(BookingRates, HomogeneousExample) {
  const auto spec = MarketSpec::homogeneous(0.25249, 0.25249, 1.0);
  const auto rates = rate_matrices(spec, Arm::control);
  EXPECT_NEAR(rates.omega(0, 0), 0.19999397377370743, 1e-15);
}

TEST(BookingRates, VanishingDemandLeavesApplicationRates) {
  const auto spec = MarketSpec::homogeneous(0.7, 0.7, 1e-12);
  const auto rates = rate_matrices(spec, Arm::control);
  EXPECT_NEAR(rates.omega(0, 0), rates.psi(0, 0), 1e-12);
}

TEST(BookingRates, RejectsMismatchedPsi) {
  EXPECT_THROW(booking_rates(calibrated(), Matrix(2, 1)), std::invalid_argument);
}

TEST(LimitBookingRate, CalibratedPair) {
  EXPECT_NEAR(limit_booking_rate(calibrated(), Arm::control), 0.20, 1e-12);
  EXPECT_NEAR(limit_booking_rate(calibrated(), Arm::treatment), 0.22, 1e-12);
}

TEST(LimitBookingRate, ListingFormMatchesCustomerForm) {
  MarketSpec spec;
  spec.customer_types = {"a", "b"};
  spec.listing_types = {"x", "y", "z"};
  spec.sigma = {0.3, 0.7};
  spec.tau = {0.2, 0.5, 0.3};
  spec.lambda = 1.7;
  spec.phi_control = Matrix{{0.2, 0.9, 0.0}, {1.4, 0.3, 0.6}};
  spec.phi_treatment = spec.phi_control;
  const auto rates = rate_matrices(spec, Arm::control);
  double customer_side = 0.0;
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t t = 0; t < 3; ++t)
      customer_side += spec.lambda * spec.sigma[g] * rates.omega(g, t) * spec.tau[t];
  EXPECT_NEAR(limit_booking_rate(spec, Arm::control), customer_side, 1e-14);
}

TEST(Gte, CalibratedPairAndNull) {
  EXPECT_NEAR(gte_limit(calibrated()), 0.02, 1e-12);
  EXPECT_EQ(gte_limit(MarketSpec::homogeneous(0.4, 0.4, 2.0)), 0.0);
  EXPECT_GT(gte_limit(MarketSpec::homogeneous(0.25249, 1.2 * 0.25249, 1.0)), 0.0);
}

TEST(EstimatorLimits, CalibratedPair) {
  EXPECT_NEAR(cr_estimator_limit(calibrated(), 0.5), 0.02255422712581584, 1e-15);
  EXPECT_NEAR(lr_estimator_limit(calibrated(), 0.5), 0.022945869154358877, 1e-15);
}

TEST(EstimatorLimits, RejectAllocationsOutsideOpenInterval) {
  for (double a : {0.0, 1.0, -0.1, 1.5}) {
    EXPECT_THROW(cr_estimator_limit(calibrated(), a), std::domain_error);
    EXPECT_THROW(lr_estimator_limit(calibrated(), a), std::domain_error);
  }
}

TEST(EstimatorLimits, CrDecreasesInAllocation) {
  const auto spec = MarketSpec::homogeneous(0.25249, 1.2 * 0.25249, 1.0);
  EXPECT_LT(cr_estimator_limit(spec, 0.9), cr_estimator_limit(spec, 0.1));
}

TEST(EstimatorLimits, LrVanishesInSupplyConstrainedLimit) {
  EXPECT_LT(lr_estimator_limit(calibrated(1e3), 0.5), 1e-90);
}

TEST(AsymptoticBias, Reports) {
  const auto cr = asymptotic_bias(calibrated(), DesignSpec::cr(0.5));
  EXPECT_NEAR(cr.bias, 0.02255422712581584 - 0.02, 1e-12);
  ASSERT_TRUE(cr.relative_bias);
  EXPECT_NEAR(*cr.relative_bias, 0.1277, 1e-3);
  EXPECT_EQ(cr.bias, cr.estimator_limit - cr.gte_limit);

  const auto lr = asymptotic_bias(calibrated(), DesignSpec::lr(0.5));
  EXPECT_NEAR(lr.bias, 0.00295, 1e-5);
  EXPECT_NEAR(*lr.relative_bias, 0.148, 1e-3);
}

TEST(AsymptoticBias, NullInterventionHasNoRelativeBias) {
  const auto r = asymptotic_bias(MarketSpec::homogeneous(0.3, 0.3, 1.0), DesignSpec::lr(0.3));
  EXPECT_EQ(r.bias, 0.0);
  EXPECT_FALSE(r.relative_bias);
}

TEST(AsymptoticBias, GlobalDesignsRejected) {
  EXPECT_THROW(asymptotic_bias(calibrated(), DesignSpec::global_control()),
               std::invalid_argument);
}

TEST(BiasDifferentialBound, ScalesWithLambdaSquared) {
  EXPECT_NEAR(bias_differential_bound(calibrated()), 0.0010977928132358353, 1e-15);
  EXPECT_NEAR(bias_differential_bound(calibrated(2.0)), 4 * bias_differential_bound(calibrated()),
              1e-15);
  EXPECT_EQ(bias_differential_bound(MarketSpec::homogeneous(0.3, 0.3, 5.0)), 0.0);
}

TEST(LambdaStar, ExistsForCalibratedPair) {
  const auto star = find_lambda_star(kPhi, kPhiT);
  ASSERT_TRUE(star);
  EXPECT_GT(*star, 0.0);
  // Endpoint biases agree at the cutoff.
  EXPECT_NEAR(homogeneous::lr_limit(kPhi, kPhiT, *star, 0.0),
              homogeneous::lr_limit(kPhi, kPhiT, *star, 1.0), 1e-10);
}

bool increasing_on_grid(double phi, double phi_t, double lambda) {
  double prev = -1.0;
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double b = std::abs(homogeneous::lr_limit(phi, phi_t, lambda, a) -
                              homogeneous::gte(phi, phi_t, lambda));
    if (b <= prev) return false;
    prev = b;
  }
  return true;
}

bool decreasing_on_grid(double phi, double phi_t, double lambda) {
  double prev = INFINITY;
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double b = std::abs(homogeneous::lr_limit(phi, phi_t, lambda, a) -
                              homogeneous::gte(phi, phi_t, lambda));
    if (b >= prev) return false;
    prev = b;
  }
  return true;
}

TEST(LambdaStar, DirectionFlipsAcrossCutoff) {
  const double star = *find_lambda_star(kPhi, kPhiT);
  EXPECT_TRUE(decreasing_on_grid(kPhi, kPhiT, star / 2));
  EXPECT_TRUE(increasing_on_grid(kPhi, kPhiT, star * 2));
}

TEST(LambdaStar, SwappingRatesExchangesDirections) {
  const double star = *find_lambda_star(kPhi, kPhiT);
  const double swapped = *find_lambda_star(kPhiT, kPhi);
  EXPECT_NEAR(star, swapped, 1e-8);
  EXPECT_TRUE(increasing_on_grid(kPhiT, kPhi, star / 2));
  EXPECT_TRUE(decreasing_on_grid(kPhiT, kPhi, star * 2));
}

TEST(LambdaStar, RejectsEqualRates) {
  EXPECT_THROW(find_lambda_star(0.3, 0.3), std::domain_error);
  EXPECT_THROW(find_lambda_star(0.0, 0.3), std::domain_error);
}

TEST(Calibration, MatchesTargets) {
  EXPECT_NEAR(calibrate_phi(0.20, 1.0), kPhi, 1e-10);
  EXPECT_NEAR(calibrate_phi(0.22, 1.0), kPhiT, 1e-10);
  EXPECT_LT(calibrate_phi(1e-6, 1.0), 1e-5);
}

TEST(Calibration, InfeasibleTargetNamesSupremum) {
  try {
    calibrate_phi(0.7, 1.0);
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("0.632"), std::string::npos) << e.what();
  }
  EXPECT_THROW(calibrate_phi(0.0, 1.0), std::domain_error);
  EXPECT_THROW(calibrate_phi(0.2, 0.0), std::domain_error);
}

TEST(Calibration, IsFast) {
  const auto start = std::chrono::steady_clock::now();
  volatile double sink = calibrate_phi(0.2, 1.0);
  (void)sink;
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(1));
}

TEST(MarketSpec, ValidationNamesField) {
  auto spec = calibrated();
  spec.sigma = {0.5};
  try {
    spec.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("sigma", 0), 0u) << e.what();
  }
  spec = calibrated();
  spec.phi_treatment = Matrix(1, 2, 0.1);
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = calibrated();
  spec.lambda = 0.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace mktlab
