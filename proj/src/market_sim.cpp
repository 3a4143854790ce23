#include "mktlab/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mktlab {

std::int64_t FiniteMarket::n_customers() const {
  return std::accumulate(customer_counts.begin(), customer_counts.end(), std::int64_t{0});
}

void FiniteMarket::validate() const {
  if (n_listings <= 0) throw std::invalid_argument("n_listings: must be positive");
  if (listing_counts.empty()) throw std::invalid_argument("listing_counts: must be nonempty");
  if (customer_counts.empty()) throw std::invalid_argument("customer_counts: must be nonempty");
  for (auto c : listing_counts)
    if (c < 0) throw std::invalid_argument("listing_counts: must be >= 0");
  for (auto c : customer_counts)
    if (c < 0) throw std::invalid_argument("customer_counts: must be >= 0");
  if (std::accumulate(listing_counts.begin(), listing_counts.end(), std::int64_t{0}) != n_listings)
    throw std::invalid_argument("listing_counts: must sum to n_listings");
  // Application tallies are 32-bit.
  if (n_customers() > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("customer_counts: too many customers");
  if (consider_prob.rows() != customer_counts.size() ||
      consider_prob.cols() != listing_counts.size())
    throw std::invalid_argument("consider_prob: dimensions must be customer types x listing types");
  for (double p : consider_prob.values())
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("consider_prob: entries must lie in [0,1]");
  if (!customer_arm.empty() && customer_arm.size() != customer_counts.size())
    throw std::invalid_argument("customer_arm: one label per customer type");
  if (!listing_arm.empty() && listing_arm.size() != listing_counts.size())
    throw std::invalid_argument("listing_arm: one label per listing type");
}

void ApplicationTally::reset(const FiniteMarket& market) {
  customer_types_ = market.customer_counts.size();
  counts_.resize(market.listing_counts.size());
  for (std::size_t t = 0; t < counts_.size(); ++t) {
    counts_[t].assign(static_cast<std::size_t>(market.listing_counts[t]) * customer_types_, 0);
  }
}

std::int64_t ApplicationTally::total() const {
  std::int64_t sum = 0;
  for (const auto& v : counts_)
    for (auto c : v) sum += c;
  return sum;
}

SamplingPlan::SamplingPlan(FiniteMarket market) : market_(std::move(market)) {
  market_.validate();
  const std::size_t nl = market_.listing_counts.size();
  samplers_.reserve(market_.customer_counts.size() * nl);
  for (std::size_t g = 0; g < market_.customer_counts.size(); ++g)
    for (std::size_t t = 0; t < nl; ++t)
      samplers_.emplace_back(static_cast<std::uint64_t>(market_.listing_counts[t]),
                             market_.consider_prob(g, t));
}

void sample_consideration_and_apply(const SamplingPlan& plan, Rng& rng, ApplicationTally& out) {
  const FiniteMarket& market = plan.market();
  const std::size_t nl = market.listing_counts.size();
  out.reset(market);
  std::vector<std::uint64_t> considered(nl);

  for (std::size_t g = 0; g < market.customer_counts.size(); ++g) {
    for (std::int64_t c = 0; c < market.customer_counts[g]; ++c) {
      std::uint64_t total = 0;
      for (std::size_t t = 0; t < nl; ++t) total += considered[t] = plan.sampler(g, t)(rng);
      if (total == 0) continue;

      std::size_t type = 0;
      if (nl > 1) {
        std::uint64_t pick = rng.index(total);
        while (pick >= considered[type]) pick -= considered[type++];
      }
      const std::uint64_t listing =
          rng.index(static_cast<std::uint64_t>(market.listing_counts[type]));
      out.add(type, listing, g);
    }
  }
}

ApplicationTally sample_consideration_and_apply(const FiniteMarket& market, Rng& rng) {
  SamplingPlan plan(market);
  ApplicationTally out;
  sample_consideration_and_apply(plan, rng, out);
  return out;
}

BookingTally accept_applications(const FiniteMarket& market, const ApplicationTally& apps,
                                 Rng& rng) {
  const std::size_t ng = apps.customer_types();
  const std::size_t nl = apps.listing_types();
  if (ng != market.customer_counts.size() || nl != market.listing_counts.size())
    throw std::invalid_argument("application tally does not match the market");

  BookingTally tally;
  tally.bookings_by_listing_type.assign(nl, 0);
  tally.bookings_by_customer_type.assign(ng, 0);

  for (std::size_t t = 0; t < nl; ++t) {
    const std::uint64_t listings = apps.listings(t);
    for (std::uint64_t l = 0; l < listings; ++l) {
      std::uint64_t applicants = 0;
      for (std::size_t g = 0; g < ng; ++g) applicants += apps.count(t, l, g);
      if (applicants == 0) continue;

      std::size_t winner = 0;
      if (ng > 1) {
        std::uint64_t pick = rng.index(applicants);
        while (pick >= apps.count(t, l, winner)) pick -= apps.count(t, l, winner++);
      }
      ++tally.bookings_by_listing_type[t];
      ++tally.bookings_by_customer_type[winner];
      ++tally.total_bookings;
    }
  }

  // One booking per listing and one application per customer make this a
  // matching.
  const auto by_customer = std::accumulate(tally.bookings_by_customer_type.begin(),
                                           tally.bookings_by_customer_type.end(), std::int64_t{0});
  for (std::size_t g = 0; g < ng; ++g)
    if (tally.bookings_by_customer_type[g] > market.customer_counts[g])
      throw std::logic_error("more bookings than customers of a type");
  if (by_customer != tally.total_bookings ||
      tally.total_bookings > std::min(market.n_listings, market.n_customers()))
    throw std::logic_error("booking tally is not a matching");
  return tally;
}

BookingTally run_realization(const SamplingPlan& plan, std::uint64_t seed,
                             ApplicationTally& scratch) {
  Rng rng(seed);
  sample_consideration_and_apply(plan, rng, scratch);
  return accept_applications(plan.market(), scratch, rng);
}

BookingTally run_realization(const FiniteMarket& market, std::uint64_t seed) {
  SamplingPlan plan(market);
  ApplicationTally scratch;
  return run_realization(plan, seed, scratch);
}

}  // namespace mktlab
