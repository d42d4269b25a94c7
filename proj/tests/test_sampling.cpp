#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "helpers.hpp"

using namespace pcdm;
using testing_helpers::chi2_crit_999;
using testing_helpers::chi_square;

TEST(Sampling, TauEqualsNIsAlwaysFullSet) {
  Sampler s(SamplingSpec::tau_nice(5, 5), 1);
  for (std::uint64_t k = 0; k < 50; ++k) EXPECT_EQ(s.draw(k), (BlockSet{0, 1, 2, 3, 4}));
}

TEST(Sampling, DrawsAreSortedDistinctAndOfSizeTau) {
  Sampler s(SamplingSpec::tau_nice(20, 7), 9);
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto S = s.draw(k);
    ASSERT_EQ(S.size(), 7u);
    EXPECT_TRUE(std::is_sorted(S.begin(), S.end()));
    EXPECT_EQ(std::adjacent_find(S.begin(), S.end()), S.end());
    EXPECT_LT(S.back(), 20u);
  }
}

TEST(Sampling, DrawDependsOnlyOnSeedAndIndex) {
  Sampler a(SamplingSpec::tau_nice(30, 4), 123);
  Sampler b(SamplingSpec::tau_nice(30, 4), 123);
  std::vector<BlockSet> forward;
  for (std::uint64_t k = 0; k < 20; ++k) forward.push_back(a.draw(k));
  for (std::uint64_t k = 20; k-- > 0;) EXPECT_EQ(b.draw(k), forward[k]);
  Sampler c(SamplingSpec::tau_nice(30, 4), 124);
  int same = 0;
  for (std::uint64_t k = 0; k < 20; ++k) same += c.draw(k) == forward[k];
  EXPECT_LT(same, 20);
}

TEST(Sampling, SerialUniformChiSquare) {
  Sampler s(SamplingSpec::serial(3), 77);
  std::vector<double> counts(3, 0.0);
  const int draws = 30000;
  for (int k = 0; k < draws; ++k) {
    const auto S = s.draw(static_cast<std::uint64_t>(k));
    ASSERT_EQ(S.size(), 1u);
    counts[S[0]] += 1;
  }
  EXPECT_LT(chi_square(counts, std::vector<double>(3, draws / 3.0)), chi2_crit_999(2));
}

TEST(Sampling, TauNiceSubsetFrequenciesChiSquare) {
  Sampler s(SamplingSpec::tau_nice(6, 2), 2013);
  std::map<BlockSet, double> counts;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) counts[s.draw(static_cast<std::uint64_t>(k))] += 1;
  ASSERT_EQ(counts.size(), 15u);
  std::vector<double> observed;
  for (const auto& [set, c] : counts) observed.push_back(c);
  EXPECT_LT(chi_square(observed, std::vector<double>(15, draws / 15.0)), chi2_crit_999(14));
}

TEST(Sampling, DrawFrequenciesMatchEnumeratedSupport) {
  const auto spec = SamplingSpec::doubly_uniform(4, {0.0, 0.3, 0.7});
  const auto support = enumerate_support(spec);
  std::map<BlockSet, double> expected;
  for (const auto& ws : support) expected[ws.set] = ws.probability;
  ASSERT_EQ(expected.size(), 4u + 6u);
  Sampler s(spec, 5);
  std::map<BlockSet, double> counts;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const auto S = s.draw(static_cast<std::uint64_t>(k));
    ASSERT_TRUE(expected.count(S));
    counts[S] += 1;
  }
  std::vector<double> obs, exp;
  for (const auto& [set, p] : expected) {
    obs.push_back(counts[set]);
    exp.push_back(p * draws);
  }
  EXPECT_LT(chi_square(obs, exp), chi2_crit_999(9));
}

TEST(Sampling, PartitionDrawsWholeParts) {
  const auto spec = SamplingSpec::partition(5, {{0, 3}, {1, 2, 4}});
  Sampler s(spec, 1);
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto S = s.draw(k);
    EXPECT_TRUE(S == (BlockSet{0, 3}) || S == (BlockSet{1, 2, 4}));
  }
}

TEST(Sampling, Alpha) {
  EXPECT_DOUBLE_EQ(alpha(SamplingSpec::tau_nice(2000, 512)), 0.256);
  EXPECT_DOUBLE_EQ(alpha(SamplingSpec::serial(7)), 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(alpha(SamplingSpec::doubly_uniform(4, {0.0, 0.5, 0.5})), 1.5 / 4.0);
}

TEST(Sampling, CardinalityMoments) {
  EXPECT_EQ(cardinality_moments(SamplingSpec::tau_nice(10, 4)), (std::pair<double, double>{4, 16}));
  const auto m = cardinality_moments(SamplingSpec::doubly_uniform(5, {0.0, 0.5, 0.0, 0.5}));
  EXPECT_DOUBLE_EQ(m.first, 2.0);
  EXPECT_DOUBLE_EQ(m.second, 5.0);
  EXPECT_EQ(cardinality_moments(SamplingSpec::serial(9)), (std::pair<double, double>{1, 1}));
}

TEST(Sampling, EnumerateSupportExamples) {
  const auto tn = enumerate_support(SamplingSpec::tau_nice(4, 2));
  ASSERT_EQ(tn.size(), 6u);
  for (const auto& ws : tn) EXPECT_DOUBLE_EQ(ws.probability, 1.0 / 6.0);

  const auto part = enumerate_support(SamplingSpec::partition(3, {{0, 1}, {2}}));
  ASSERT_EQ(part.size(), 2u);
  EXPECT_EQ(part[0].set, (BlockSet{0, 1}));
  EXPECT_DOUBLE_EQ(part[0].probability, 0.5);
  EXPECT_DOUBLE_EQ(part[1].probability, 0.5);

  const auto du = enumerate_support(SamplingSpec::doubly_uniform(3, {0.0, 0.4, 0.6}));
  ASSERT_EQ(du.size(), 6u);
  for (const auto& ws : du) EXPECT_DOUBLE_EQ(ws.probability, ws.set.size() == 1 ? 0.4 / 3 : 0.6 / 3);
}

TEST(Sampling, EveryKindIsUniform) {
  const std::vector<SamplingSpec> specs = {
      SamplingSpec::tau_nice(6, 3), SamplingSpec::serial(5),
      SamplingSpec::doubly_uniform(5, {0.1, 0.2, 0.0, 0.3, 0.0, 0.4}),
      SamplingSpec::partition(6, {{0, 5}, {1, 2}, {3, 4}})};
  for (const auto& spec : specs) {
    const auto support = enumerate_support(spec);
    std::vector<double> p(spec.n(), 0.0);
    double total = 0.0;
    for (const auto& ws : support) {
      EXPECT_GT(ws.probability, 0.0);
      total += ws.probability;
      for (std::size_t i : ws.set) p[i] += ws.probability;
    }
    EXPECT_NEAR(total, 1.0, 1e-12) << spec.describe();
    const double a = alpha(spec);
    EXPECT_NEAR(a * static_cast<double>(spec.n()), cardinality_moments(spec).first, 1e-12);
    for (double pi : p) EXPECT_NEAR(pi, a, 1e-12) << spec.describe();
  }
}

TEST(Sampling, SupportGuard) {
  EXPECT_THROW(enumerate_support(SamplingSpec::tau_nice(60, 30)), std::length_error);
}

TEST(Sampling, Validation) {
  EXPECT_THROW(SamplingSpec::tau_nice(5, 0), std::invalid_argument);
  EXPECT_THROW(SamplingSpec::tau_nice(5, 6), std::invalid_argument);
  EXPECT_THROW(SamplingSpec::doubly_uniform(3, {0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(SamplingSpec::doubly_uniform(3, {1.0}), std::invalid_argument);
  EXPECT_THROW(SamplingSpec::doubly_uniform(2, {0.2, 0.2, 0.2, 0.4}), std::invalid_argument);
  EXPECT_THROW(SamplingSpec::partition(3, {{0, 1}, {1, 2}}), std::invalid_argument);
  EXPECT_THROW(SamplingSpec::partition(3, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(SamplingSpec::serial(0), std::invalid_argument);
}

TEST(Sampling, Binomial) {
  EXPECT_EQ(binomial(6, 2), 15.0);
  EXPECT_EQ(binomial(8, 3), 56.0);
  EXPECT_EQ(binomial(3, 4), 0.0);
}
