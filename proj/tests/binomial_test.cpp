#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "mktlab/binomial.hpp"
#include "mktlab/rng.hpp"

namespace mktlab {
namespace {

double exact_pmf(std::uint64_t n, double p, std::uint64_t k) {
  const long double nn = n, kk = k, pp = p;
  return static_cast<double>(std::exp(std::lgamma(nn + 1) - std::lgamma(kk + 1) -
                                      std::lgamma(nn - kk + 1) + kk * std::log(pp) +
                                      (nn - kk) * std::log1p(-pp)));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndIndexRanges) {
  Rng rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.index(7);
    ASSERT_LT(k, 7u);
    ++hits[k];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 400);
  EXPECT_EQ(rng.index(1), 0u);
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_NE(derive_seed(42, 0), derive_seed(43, 0));
  EXPECT_EQ(splitmix64_mix(0), 0u);
  EXPECT_EQ(splitmix64_mix(1), 0x5692161D100B05E5ULL);
}

TEST(Binomial, DegenerateCases) {
  Rng rng(1);
  BinomialSampler zero_p(100, 0.0), one_p(100, 1.0), no_trials(0, 0.4);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(zero_p(rng), 0u);
    EXPECT_EQ(one_p(rng), 100u);
    EXPECT_EQ(no_trials(rng), 0u);
  }
  EXPECT_THROW(BinomialSampler(10, 1.5), std::domain_error);
  EXPECT_THROW(BinomialSampler(10, -0.1), std::domain_error);
}

TEST(Binomial, TableMatchesExactPmf) {
  for (auto [n, p] : {std::pair<std::uint64_t, double>{5, 0.4}, {40, 0.03}, {1000000, 2.5e-7},
                      {1000000, 0.5}}) {
    const BinomialSampler s(n, p);
    const auto& cdf = s.cdf();
    ASSERT_FALSE(cdf.empty());
    EXPECT_EQ(cdf.back(), 1.0);
    double prev = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      const double mass = cdf[i] - prev;
      prev = cdf[i];
      const std::uint64_t k = s.first() + i;
      EXPECT_NEAR(mass, exact_pmf(n, p, k), 1e-14 + 1e-10 * exact_pmf(n, p, k)) << n << " " << k;
    }
  }
}

TEST(Binomial, FrequenciesMatchPmf) {
  const BinomialSampler s(5, 0.4);
  Rng rng(99);
  constexpr int kDraws = 200000;
  std::vector<int> hits(6, 0);
  for (int i = 0; i < kDraws; ++i) ++hits[s(rng)];
  double chi2 = 0.0;
  for (std::uint64_t k = 0; k <= 5; ++k) {
    const double e = kDraws * exact_pmf(5, 0.4, k);
    chi2 += (hits[k] - e) * (hits[k] - e) / e;
  }
  // 5 degrees of freedom; 20.5 is the 0.999 quantile.
  EXPECT_LT(chi2, 20.5);
}

TEST(Binomial, MomentsForLargeTrials) {
  for (auto [n, p] : {std::pair<std::uint64_t, double>{1000000, 2.5e-7}, {100000, 2.5e-6},
                      {10000000, 0.3}}) {
    const BinomialSampler s(n, p);
    Rng rng(5);
    constexpr int kDraws = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < kDraws; ++i) {
      const double x = static_cast<double>(s(rng));
      sum += x;
      sq += x * x;
    }
    const double mean = sum / kDraws;
    const double var = sq / kDraws - mean * mean;
    const double true_var = static_cast<double>(n) * p * (1 - p);
    EXPECT_NEAR(mean, s.mean(), 5 * std::sqrt(true_var / kDraws)) << n << " " << p;
    EXPECT_NEAR(var / true_var, 1.0, 0.03) << n << " " << p;
  }
}

}  // namespace
}  // namespace mktlab
