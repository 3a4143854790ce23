#include "mktlab/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "mktlab/summation.hpp"

namespace mktlab {

void TinyMarket::validate() const {
  if (prob.rows() == 0 || prob.cols() == 0)
    throw std::invalid_argument("prob: need at least one customer and one listing");
  if (prob.rows() * prob.cols() > kMaxPairs)
    throw std::length_error("prob: more than 12 customer-listing pairs");
  for (double p : prob.values())
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("prob: entries must lie in [0,1]");
  if (customer_arm.size() != prob.rows())
    throw std::invalid_argument("customer_arm: one label per customer");
  if (listing_arm.size() != prob.cols())
    throw std::invalid_argument("listing_arm: one label per listing");
}

namespace {

class Enumerator {
 public:
  explicit Enumerator(const TinyMarket& m)
      : m_(m), customers_(m.prob.rows()), listings_(m.prob.cols()) {
    for (std::size_t c = 0; c < customers_; ++c)
      (m.customer_arm[c] == Arm::treatment ? treated_customers_ : control_customers_) += 1;
    for (std::size_t l = 0; l < listings_; ++l)
      (m.listing_arm[l] == Arm::treatment ? treated_listings_ : control_listings_) += 1;
    if (m.design == DesignKind::customer_randomized && (!treated_customers_ || !control_customers_))
      throw std::invalid_argument("customer_arm: cr estimator needs both arms");
    if (m.design == DesignKind::listing_randomized && (!treated_listings_ || !control_listings_))
      throw std::invalid_argument("listing_arm: lr estimator needs both arms");
  }

  ExactExpectations run() {
    const std::size_t pairs = customers_ * listings_;
    choice_.assign(customers_, -1);
    for (std::uint32_t mask = 0; mask < (1u << pairs); ++mask) {
      double w = 1.0;
      for (std::size_t i = 0; i < pairs; ++i) {
        const double p = m_.prob.values()[i];
        w *= (mask >> i & 1u) ? p : 1.0 - p;
      }
      if (w == 0.0) continue;
      mask_ = mask;
      apply(0, w);
    }
    ExactExpectations out;
    out.total_weight = weight_.value();
    out.bookings = bookings_.value();
    out.bookings_treated_customers = booked_tc_.value();
    out.bookings_control_customers = booked_cc_.value();
    out.bookings_treated_listings = booked_tl_.value();
    out.bookings_control_listings = booked_cl_.value();
    out.estimator = est_.value();
    out.estimator_variance = std::max(0.0, est_sq_.value() - out.estimator * out.estimator);
    return out;
  }

 private:
  bool considered(std::size_t c, std::size_t l) const {
    return mask_ >> (c * listings_ + l) & 1u;
  }

  void apply(std::size_t c, double w) {
    if (c == customers_) {
      winner_.assign(listings_, -1);
      accept(0, w);
      return;
    }
    std::size_t k = 0;
    for (std::size_t l = 0; l < listings_; ++l) k += considered(c, l);
    if (k == 0) {
      choice_[c] = -1;
      apply(c + 1, w);
      return;
    }
    for (std::size_t l = 0; l < listings_; ++l) {
      if (!considered(c, l)) continue;
      choice_[c] = static_cast<int>(l);
      apply(c + 1, w / static_cast<double>(k));
    }
  }

  void accept(std::size_t l, double w) {
    if (l == listings_) {
      record(w);
      return;
    }
    std::size_t k = 0;
    for (std::size_t c = 0; c < customers_; ++c) k += choice_[c] == static_cast<int>(l);
    if (k == 0) {
      winner_[l] = -1;
      accept(l + 1, w);
      return;
    }
    for (std::size_t c = 0; c < customers_; ++c) {
      if (choice_[c] != static_cast<int>(l)) continue;
      winner_[l] = static_cast<int>(c);
      accept(l + 1, w / static_cast<double>(k));
    }
  }

  void record(double w) {
    double q = 0, tc = 0, cc = 0, tl = 0, cl = 0;
    for (std::size_t l = 0; l < listings_; ++l) {
      if (winner_[l] < 0) continue;
      q += 1;
      (m_.customer_arm[static_cast<std::size_t>(winner_[l])] == Arm::treatment ? tc : cc) += 1;
      (m_.listing_arm[l] == Arm::treatment ? tl : cl) += 1;
    }
    const double n = static_cast<double>(listings_);
    const double m = static_cast<double>(customers_);
    double est = q / n;
    if (m_.design == DesignKind::customer_randomized)
      est = m / n * (tc / treated_customers_ - cc / control_customers_);
    else if (m_.design == DesignKind::listing_randomized)
      est = tl / treated_listings_ - cl / control_listings_;

    weight_ += w;
    bookings_ += w * q;
    booked_tc_ += w * tc;
    booked_cc_ += w * cc;
    booked_tl_ += w * tl;
    booked_cl_ += w * cl;
    est_ += w * est;
    est_sq_ += w * est * est;
  }

  const TinyMarket& m_;
  std::size_t customers_;
  std::size_t listings_;
  double treated_customers_ = 0, control_customers_ = 0;
  double treated_listings_ = 0, control_listings_ = 0;
  std::uint32_t mask_ = 0;
  std::vector<int> choice_;
  std::vector<int> winner_;
  CompensatedSum weight_, bookings_, booked_tc_, booked_cc_, booked_tl_, booked_cl_, est_, est_sq_;
};

}  // namespace

ExactExpectations exact_expectations(const TinyMarket& market) {
  market.validate();
  return Enumerator(market).run();
}

FiniteMarket to_finite_market(const TinyMarket& market) {
  market.validate();
  const std::size_t nc = market.prob.rows();
  const std::size_t nl = market.prob.cols();

  auto column = [&](std::size_t l) {
    std::vector<double> v(nc);
    for (std::size_t c = 0; c < nc; ++c) v[c] = market.prob(c, l);
    return v;
  };

  std::vector<std::size_t> listing_rep;  // representative listing per group
  std::vector<std::int64_t> listing_counts;
  std::vector<Arm> listing_arm;
  for (std::size_t l = 0; l < nl; ++l) {
    auto it = std::find_if(listing_rep.begin(), listing_rep.end(), [&](std::size_t r) {
      return market.listing_arm[r] == market.listing_arm[l] && column(r) == column(l);
    });
    if (it == listing_rep.end()) {
      listing_rep.push_back(l);
      listing_counts.push_back(1);
      listing_arm.push_back(market.listing_arm[l]);
    } else {
      ++listing_counts[static_cast<std::size_t>(it - listing_rep.begin())];
    }
  }

  std::vector<std::size_t> customer_rep;
  std::vector<std::int64_t> customer_counts;
  std::vector<Arm> customer_arm;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto row = market.prob.row(c);
    auto it = std::find_if(customer_rep.begin(), customer_rep.end(), [&](std::size_t r) {
      const auto other = market.prob.row(r);
      return market.customer_arm[r] == market.customer_arm[c] &&
             std::equal(row.begin(), row.end(), other.begin());
    });
    if (it == customer_rep.end()) {
      customer_rep.push_back(c);
      customer_counts.push_back(1);
      customer_arm.push_back(market.customer_arm[c]);
    } else {
      ++customer_counts[static_cast<std::size_t>(it - customer_rep.begin())];
    }
  }

  FiniteMarket out;
  out.n_listings = static_cast<std::int64_t>(nl);
  out.listing_counts = std::move(listing_counts);
  out.customer_counts = std::move(customer_counts);
  out.listing_arm = std::move(listing_arm);
  out.customer_arm = std::move(customer_arm);
  out.consider_prob = Matrix(customer_rep.size(), listing_rep.size());
  for (std::size_t g = 0; g < customer_rep.size(); ++g)
    for (std::size_t t = 0; t < listing_rep.size(); ++t)
      out.consider_prob(g, t) = market.prob(customer_rep[g], listing_rep[t]);
  out.validate();
  return out;
}

}  // namespace mktlab
