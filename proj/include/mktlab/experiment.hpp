#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mktlab/design.hpp"
#include "mktlab/market_sim.hpp"
#include "mktlab/meanfield.hpp"

namespace mktlab {

/// What the estimator mean is compared against.
enum class GteReference {
  analytic,     // large-market limit
  monte_carlo,  // paired global treatment minus global control runs at the same n
};

struct RunSummary {
  std::int64_t replications = 0;
  std::int64_t n_listings = 0;
  double estimator_mean = 0.0;
  /// Sample standard deviation of one realization's estimate.
  double estimator_sd = 0.0;
  double std_error = 0.0;
  /// 95% normal half-width for the estimator mean.
  double half_width = 0.0;
  double gte_reference = 0.0;
  double bias = 0.0;
  std::optional<double> relative_bias;
  /// bias^2 + per-realization variance: the error of a single experiment.
  double mse = 0.0;
  /// n_listings * per-realization variance.
  double scaled_variance = 0.0;
};

struct ReplicationOptions {
  GteReference gte = GteReference::analytic;
  /// 0 picks default_thread_count().
  unsigned threads = 0;
};

/// MKTLAB_THREADS if set, else the hardware concurrency. Results never
/// depend on it.
unsigned default_thread_count();

/// n listings and floor(lambda * n) customers, split into extended types by
/// the design. Base type counts use largest-remainder rounding; treated
/// counts are floor(allocation * count) per type. Throws std::domain_error
/// when a group ends up empty.
FiniteMarket build_experiment_market(const MarketSpec& spec, const DesignSpec& design,
                                     std::int64_t n);

/// Difference-in-means estimate for one realization; Q/N for global designs.
double estimate(const BookingTally& tally, const DesignSpec& design, const FiniteMarket& market);

/// Estimates for replications first_index .. first_index + count - 1.
/// Replication i uses derive_seed(master_seed, i); the output is the same
/// for any thread count.
std::vector<double> replicate_estimates(const FiniteMarket& market, const DesignSpec& design,
                                        std::uint64_t first_index, std::uint64_t count,
                                        std::uint64_t master_seed, unsigned threads = 0);

/// Needs at least two estimates.
RunSummary summarize(std::span<const double> estimates, double gte_reference,
                     std::int64_t n_listings);

/// Mean of paired global-treatment minus global-control booking fractions.
double monte_carlo_gte(const MarketSpec& spec, std::int64_t n, std::uint64_t replications,
                       std::uint64_t master_seed, unsigned threads = 0);

RunSummary run_replications(const MarketSpec& spec, const DesignSpec& design, std::int64_t n,
                            std::uint64_t replications, std::uint64_t master_seed,
                            const ReplicationOptions& options = {});

}  // namespace mktlab
