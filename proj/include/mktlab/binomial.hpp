#pragma once

#include <cstdint>
#include <vector>

#include "mktlab/rng.hpp"

namespace mktlab {

/// Binomial(trials, p) by inversion of a precomputed CDF table. The table
/// spans every outcome whose probability exceeds 1e-20, so the sampled law
/// matches the exact one to double precision.
class BinomialSampler {
 public:
  BinomialSampler() : BinomialSampler(0, 0.0) {}
  BinomialSampler(std::uint64_t trials, double p);

  std::uint64_t operator()(Rng& rng) const;

  std::uint64_t trials() const { return trials_; }
  double p() const { return p_; }
  double mean() const { return static_cast<double>(trials_) * p_; }

  /// Smallest outcome held in the table and the table's cumulative weights.
  std::uint64_t first() const { return first_; }
  const std::vector<double>& cdf() const { return cdf_; }

 private:
  std::uint64_t trials_;
  double p_;
  std::uint64_t first_ = 0;
  std::vector<double> cdf_;
};

}  // namespace mktlab
