#pragma once

#include <vector>

#include "mktlab/design.hpp"
#include "mktlab/market_sim.hpp"
#include "mktlab/matrix.hpp"

namespace mktlab {

/// A market small enough to enumerate: explicit probability for every
/// customer-listing pair plus per-unit arm labels.
struct TinyMarket {
  /// customers x listings
  Matrix prob;
  std::vector<Arm> customer_arm;
  std::vector<Arm> listing_arm;
  /// Which estimator to evaluate.
  DesignKind design = DesignKind::global_control;

  static constexpr std::size_t kMaxPairs = 12;

  void validate() const;

  friend bool operator==(const TinyMarket&, const TinyMarket&) = default;
};

struct ExactExpectations {
  double total_weight = 0.0;
  double bookings = 0.0;
  double bookings_treated_customers = 0.0;
  double bookings_control_customers = 0.0;
  double bookings_treated_listings = 0.0;
  double bookings_control_listings = 0.0;
  double estimator = 0.0;
  double estimator_variance = 0.0;
};

/// Sums over every consideration outcome, every application choice and every
/// acceptance choice. Throws std::length_error above kMaxPairs pairs.
ExactExpectations exact_expectations(const TinyMarket& market);

/// Groups units with identical probabilities and arm into extended types so
/// the simulator can run the same market.
FiniteMarket to_finite_market(const TinyMarket& market);

}  // namespace mktlab
