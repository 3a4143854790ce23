#include "mktlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "mktlab/summation.hpp"

namespace mktlab {

namespace {

// Integer counts proportional to `masses` summing to `total`; leftover units
// go to the largest fractional parts, ties to the lower index.
std::vector<std::int64_t> apportion(const std::vector<double>& masses, std::int64_t total) {
  std::vector<std::int64_t> counts(masses.size());
  std::vector<double> remainder(masses.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    const double exact = masses[i] * static_cast<double>(total);
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(masses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % order.size()]];
  for (std::size_t k = 0; assigned > total; ++k, --assigned) --counts[order[order.size() - 1 - k]];
  return counts;
}

double probability(double rate, std::int64_t n) {
  return std::min(rate / static_cast<double>(n), 1.0);
}

struct GroupSizes {
  std::int64_t treated = 0;
  std::int64_t control = 0;
  std::int64_t treated_bookings = 0;
  std::int64_t control_bookings = 0;
};

}  // namespace

unsigned default_thread_count() {
  if (const char* env = std::getenv("MKTLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

FiniteMarket build_experiment_market(const MarketSpec& spec, const DesignSpec& design,
                                     std::int64_t n) {
  spec.validate();
  design.validate();
  if (n < 1) throw std::domain_error("n must be at least 1");

  const auto listings = apportion(spec.tau, n);
  const auto customers_total =
      static_cast<std::int64_t>(std::floor(spec.lambda * static_cast<double>(n)));
  if (customers_total < 1)
    throw std::domain_error("lambda * n leaves no customers at n=" + std::to_string(n));
  const auto customers = apportion(spec.sigma, customers_total);
  const std::size_t ng = customers.size();
  const std::size_t nl = listings.size();

  FiniteMarket m;
  m.n_listings = n;

  switch (design.kind) {
    case DesignKind::global_control:
    case DesignKind::global_treatment: {
      const Arm arm = design.kind == DesignKind::global_treatment ? Arm::treatment : Arm::control;
      const Matrix& phi = spec.phi(arm);
      m.listing_counts = listings;
      m.customer_counts = customers;
      m.consider_prob = Matrix(ng, nl);
      for (std::size_t g = 0; g < ng; ++g)
        for (std::size_t t = 0; t < nl; ++t) m.consider_prob(g, t) = probability(phi(g, t), n);
      m.customer_arm.assign(ng, arm);
      m.listing_arm.assign(nl, arm);
      break;
    }
    case DesignKind::customer_randomized: {
      // (g, control) then (g, treatment) for every base type g.
      m.listing_counts = listings;
      m.listing_arm.assign(nl, Arm::control);
      m.consider_prob = Matrix(2 * ng, nl);
      std::int64_t treated = 0;
      for (std::size_t g = 0; g < ng; ++g) {
        const auto t1 = static_cast<std::int64_t>(
            std::floor(design.allocation * static_cast<double>(customers[g])));
        treated += t1;
        m.customer_counts.push_back(customers[g] - t1);
        m.customer_counts.push_back(t1);
        m.customer_arm.push_back(Arm::control);
        m.customer_arm.push_back(Arm::treatment);
        for (std::size_t t = 0; t < nl; ++t) {
          m.consider_prob(2 * g, t) = probability(spec.phi_control(g, t), n);
          m.consider_prob(2 * g + 1, t) = probability(spec.phi_treatment(g, t), n);
        }
      }
      if (treated == 0 || treated == customers_total)
        throw std::domain_error("allocation " + std::to_string(design.allocation) +
                                " leaves an empty customer group at n=" + std::to_string(n));
      break;
    }
    case DesignKind::listing_randomized: {
      // (t, control) then (t, treatment) for every base type t.
      m.customer_counts = customers;
      m.customer_arm.assign(ng, Arm::control);
      m.consider_prob = Matrix(ng, 2 * nl);
      std::int64_t treated = 0;
      for (std::size_t t = 0; t < nl; ++t) {
        const auto t1 = static_cast<std::int64_t>(
            std::floor(design.allocation * static_cast<double>(listings[t])));
        treated += t1;
        m.listing_counts.push_back(listings[t] - t1);
        m.listing_counts.push_back(t1);
        m.listing_arm.push_back(Arm::control);
        m.listing_arm.push_back(Arm::treatment);
        for (std::size_t g = 0; g < ng; ++g) {
          m.consider_prob(g, 2 * t) = probability(spec.phi_control(g, t), n);
          m.consider_prob(g, 2 * t + 1) = probability(spec.phi_treatment(g, t), n);
        }
      }
      if (treated == 0 || treated == n)
        throw std::domain_error("allocation " + std::to_string(design.allocation) +
                                " leaves an empty listing group at n=" + std::to_string(n));
      break;
    }
  }
  m.validate();
  return m;
}

double estimate(const BookingTally& tally, const DesignSpec& design, const FiniteMarket& market) {
  const double n = static_cast<double>(market.n_listings);
  GroupSizes s;
  switch (design.kind) {
    case DesignKind::global_control:
    case DesignKind::global_treatment:
      return static_cast<double>(tally.total_bookings) / n;
    case DesignKind::customer_randomized:
      for (std::size_t g = 0; g < market.customer_counts.size(); ++g) {
        const bool treated = market.customer_arm_of(g) == Arm::treatment;
        (treated ? s.treated : s.control) += market.customer_counts[g];
        (treated ? s.treated_bookings : s.control_bookings) += tally.bookings_by_customer_type[g];
      }
      break;
    case DesignKind::listing_randomized:
      for (std::size_t t = 0; t < market.listing_counts.size(); ++t) {
        const bool treated = market.listing_arm_of(t) == Arm::treatment;
        (treated ? s.treated : s.control) += market.listing_counts[t];
        (treated ? s.treated_bookings : s.control_bookings) += tally.bookings_by_listing_type[t];
      }
      break;
  }
  if (s.treated == 0 || s.control == 0) throw std::domain_error("estimate: empty group");
  const double diff = static_cast<double>(s.treated_bookings) / static_cast<double>(s.treated) -
                      static_cast<double>(s.control_bookings) / static_cast<double>(s.control);
  if (design.kind == DesignKind::listing_randomized) return diff;
  return static_cast<double>(market.n_customers()) / n * diff;
}

std::vector<double> replicate_estimates(const FiniteMarket& market, const DesignSpec& design,
                                        std::uint64_t first_index, std::uint64_t count,
                                        std::uint64_t master_seed, unsigned threads) {
  const SamplingPlan plan(market);
  std::vector<double> out(count);
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(count, 1)));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    ApplicationTally scratch;
    try {
      for (std::uint64_t i = next++; i < count; i = next++) {
        const auto tally = run_realization(plan, derive_seed(master_seed, first_index + i), scratch);
        out[i] = estimate(tally, design, plan.market());
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = count;
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

RunSummary summarize(std::span<const double> estimates, double gte_reference,
                     std::int64_t n_listings) {
  if (estimates.size() < 2) throw std::invalid_argument("summarize needs at least two estimates");
  const double count = static_cast<double>(estimates.size());
  CompensatedSum sum;
  for (double x : estimates) sum += x;
  const double mean = sum.value() / count;
  CompensatedSum squares;
  for (double x : estimates) squares += (x - mean) * (x - mean);
  const double variance = squares.value() / (count - 1.0);

  RunSummary s;
  s.replications = static_cast<std::int64_t>(estimates.size());
  s.n_listings = n_listings;
  s.estimator_mean = mean;
  s.estimator_sd = std::sqrt(variance);
  s.std_error = s.estimator_sd / std::sqrt(count);
  s.half_width = 1.959963984540054 * s.std_error;
  s.gte_reference = gte_reference;
  s.bias = mean - gte_reference;
  if (gte_reference != 0.0) s.relative_bias = s.bias / gte_reference;
  s.mse = s.bias * s.bias + variance;
  s.scaled_variance = static_cast<double>(n_listings) * variance;
  return s;
}

double monte_carlo_gte(const MarketSpec& spec, std::int64_t n, std::uint64_t replications,
                       std::uint64_t master_seed, unsigned threads) {
  if (replications < 1) throw std::invalid_argument("monte_carlo_gte needs replications >= 1");
  // Both arms share seeds so their difference has lower variance.
  const std::uint64_t seed = splitmix64_mix(master_seed ^ 0x6A09E667F3BCC909ULL);
  const auto gt = DesignSpec::global_treatment();
  const auto gc = DesignSpec::global_control();
  const auto treated =
      replicate_estimates(build_experiment_market(spec, gt, n), gt, 0, replications, seed, threads);
  const auto control =
      replicate_estimates(build_experiment_market(spec, gc, n), gc, 0, replications, seed, threads);
  CompensatedSum diff;
  for (std::size_t i = 0; i < treated.size(); ++i) diff += treated[i] - control[i];
  return diff.value() / static_cast<double>(replications);
}

RunSummary run_replications(const MarketSpec& spec, const DesignSpec& design, std::int64_t n,
                            std::uint64_t replications, std::uint64_t master_seed,
                            const ReplicationOptions& options) {
  if (replications < 2) throw std::invalid_argument("replications must be at least 2");
  const FiniteMarket market = build_experiment_market(spec, design, n);
  const auto estimates =
      replicate_estimates(market, design, 0, replications, master_seed, options.threads);
  const double reference =
      options.gte == GteReference::analytic
          ? gte_limit(spec)
          : monte_carlo_gte(spec, n, replications, master_seed, options.threads);
  return summarize(estimates, reference, n);
}

}  // namespace mktlab
