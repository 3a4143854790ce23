#include "mktlab/binomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mktlab {

namespace {

constexpr double kNegligible = 1e-20;
constexpr std::size_t kLinearScanLimit = 16;

double log_pmf(std::uint64_t n, std::uint64_t k, double p) {
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) +
         kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

}  // namespace

BinomialSampler::BinomialSampler(std::uint64_t trials, double p) : trials_(trials), p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial p must lie in [0,1]");
  if (trials == 0 || p == 0.0) {
    cdf_ = {1.0};
    return;
  }
  if (p == 1.0) {
    first_ = trials;
    cdf_ = {1.0};
    return;
  }

  const double odds = p / (1.0 - p);
  const auto mode = std::min<std::uint64_t>(
      trials, static_cast<std::uint64_t>(std::floor((static_cast<double>(trials) + 1) * p)));

  // Anchor at zero when its mass is representable, otherwise at the mode.
  const double log_zero = static_cast<double>(trials) * std::log1p(-p);
  std::uint64_t anchor = 0;
  double anchor_pmf = std::exp(log_zero);
  if (log_zero < -600.0) {
    anchor = mode;
    anchor_pmf = std::exp(log_pmf(trials, mode, p));
  }

  std::vector<double> below;  // anchor-1, anchor-2, ...
  {
    double pmf = anchor_pmf;
    for (std::uint64_t k = anchor; k > 0; --k) {
      pmf *= static_cast<double>(k) / (static_cast<double>(trials - k + 1) * odds);
      if (pmf < kNegligible) break;
      below.push_back(pmf);
    }
  }
  std::vector<double> pmfs(below.rbegin(), below.rend());
  first_ = anchor - below.size();
  pmfs.push_back(anchor_pmf);
  {
    double pmf = anchor_pmf;
    for (std::uint64_t k = anchor; k < trials; ++k) {
      pmf *= static_cast<double>(trials - k) / static_cast<double>(k + 1) * odds;
      if (pmf < kNegligible && k + 1 > mode) break;
      pmfs.push_back(pmf);
    }
  }

  // lgamma at the mode carries ~1e-9 relative error for large trials; the
  // dropped tails are far smaller, so normalizing removes the anchor error.
  double total = 0.0;
  for (double x : pmfs) total += x;
  cdf_.resize(pmfs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pmfs.size(); ++i) cdf_[i] = (acc += pmfs[i]) / total;
  cdf_.back() = 1.0;
}

std::uint64_t BinomialSampler::operator()(Rng& rng) const {
  const double u = rng.uniform();
  if (u < cdf_[0]) return first_;
  std::size_t i;
  if (cdf_.size() <= kLinearScanLimit) {
    i = 1;
    while (i < cdf_.size() && u >= cdf_[i]) ++i;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }
  // u beyond the accumulated mass only happens through rounding of the tail.
  i = std::min(i, cdf_.size() - 1);
  return first_ + i;
}

}  // namespace mktlab
