#pragma once

#include <cstdint>
#include <vector>

#include "mktlab/binomial.hpp"
#include "mktlab/design.hpp"
#include "mktlab/matrix.hpp"
#include "mktlab/rng.hpp"

namespace mktlab {

/// A concrete market. Types here are extended types: a base type split by
/// treatment arm when the design randomizes that side.
struct FiniteMarket {
  std::int64_t n_listings = 0;
  std::vector<std::int64_t> listing_counts;
  std::vector<std::int64_t> customer_counts;
  /// customer type x listing type, probability that one customer considers
  /// one listing.
  Matrix consider_prob;
  /// Arm of each extended type. Empty means all control.
  std::vector<Arm> customer_arm;
  std::vector<Arm> listing_arm;

  std::int64_t n_customers() const;
  Arm customer_arm_of(std::size_t type) const {
    return customer_arm.empty() ? Arm::control : customer_arm[type];
  }
  Arm listing_arm_of(std::size_t type) const {
    return listing_arm.empty() ? Arm::control : listing_arm[type];
  }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct BookingTally {
  std::vector<std::int64_t> bookings_by_listing_type;
  std::vector<std::int64_t> bookings_by_customer_type;
  std::int64_t total_bookings = 0;

  friend bool operator==(const BookingTally&, const BookingTally&) = default;
};

/// Applications received by every listing, broken down by the applicant's
/// customer type. Applicant identities are not kept; acceptance only needs
/// the per-type counts.
class ApplicationTally {
 public:
  /// Sizes the tally for `market` and zeroes it. Reuses storage.
  void reset(const FiniteMarket& market);

  void add(std::size_t listing_type, std::uint64_t listing, std::size_t customer_type) {
    ++counts_[listing_type][listing * customer_types_ + customer_type];
  }
  std::uint32_t count(std::size_t listing_type, std::uint64_t listing,
                      std::size_t customer_type) const {
    return counts_[listing_type][listing * customer_types_ + customer_type];
  }
  std::size_t customer_types() const { return customer_types_; }
  std::size_t listing_types() const { return counts_.size(); }
  std::uint64_t listings(std::size_t listing_type) const {
    return customer_types_ ? counts_[listing_type].size() / customer_types_ : 0;
  }
  std::int64_t total() const;

 private:
  std::size_t customer_types_ = 0;
  std::vector<std::vector<std::uint32_t>> counts_;
};

/// Precomputed per-pair consideration-count samplers for one market.
/// Immutable after construction and safe to share between threads.
class SamplingPlan {
 public:
  explicit SamplingPlan(FiniteMarket market);

  const FiniteMarket& market() const { return market_; }
  const BinomialSampler& sampler(std::size_t customer_type, std::size_t listing_type) const {
    return samplers_[customer_type * market_.listing_counts.size() + listing_type];
  }

 private:
  FiniteMarket market_;
  std::vector<BinomialSampler> samplers_;
};

/// Every customer draws how many listings of each type it considers, then
/// applies to one of its considered listings uniformly at random (customers
/// with an empty consideration set leave).
void sample_consideration_and_apply(const SamplingPlan& plan, Rng& rng, ApplicationTally& out);
ApplicationTally sample_consideration_and_apply(const FiniteMarket& market, Rng& rng);

/// Each listing with applicants books one of them uniformly at random.
BookingTally accept_applications(const FiniteMarket& market, const ApplicationTally& apps,
                                 Rng& rng);

/// One full realization. `scratch` is overwritten.
BookingTally run_realization(const SamplingPlan& plan, std::uint64_t seed,
                             ApplicationTally& scratch);
BookingTally run_realization(const FiniteMarket& market, std::uint64_t seed);

}  // namespace mktlab
