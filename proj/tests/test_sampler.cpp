#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "pullcons/sampler.hpp"

namespace {

using namespace pullcons;

constexpr double kAlpha = 1e-3;

TEST(RngStream, Reproducible) {
  RngStream a(42, {1, 2, 3});
  RngStream b(42, {1, 2, 3});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, SubstreamsDiffer) {
  const RngStream base(42);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t t = 0; t < 50; ++t) firsts.insert(base.for_trial(t).next_u64());
  for (std::uint64_t p = 1; p < 50; ++p) firsts.insert(base.for_purpose(p).next_u64());
  firsts.insert(RngStream(43).next_u64());
  EXPECT_EQ(firsts.size(), 100u);
  EXPECT_EQ(base.for_trial(7).id().trial, 7u);
  EXPECT_EQ(base.for_purpose(9).id().purpose, 9u);
  RngStream x = base.for_trial(3);
  RngStream y = RngStream(42, {0, 3, 0});
  EXPECT_EQ(x.next_u64(), y.next_u64());
}

TEST(RngStream, Uniform01OpenInterval) {
  RngStream r(1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform01();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 100000.0));
}

TEST(RngStream, UniformIndexGof) {
  RngStream r(2);
  const std::uint64_t bound = 7;
  std::map<std::uint64_t, std::uint64_t> obs;
  std::map<std::uint64_t, double> law;
  for (std::uint64_t i = 0; i < bound; ++i) law[i] = 1.0 / bound;
  const std::uint64_t samples = 70000;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const auto v = r.uniform_index(bound);
    ASSERT_LT(v, bound);
    ++obs[v];
  }
  EXPECT_GT(oracle::chi_square(obs, law, samples).p_value, kAlpha);
  EXPECT_EQ(r.uniform_index(1), 0u);
}

TEST(Binomial, Degenerate) {
  RngStream r(3);
  EXPECT_EQ(sample_binomial(0, 0.3, r), 0);
  EXPECT_EQ(sample_binomial(17, 0.0, r), 0);
  EXPECT_EQ(sample_binomial(17, 1.0, r), 17);
  EXPECT_THROW(sample_binomial(-1, 0.5, r), Error);
}

std::map<Count, double> binomial_law(Count n, double p) {
  boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
  std::map<Count, double> law;
  for (Count k = 0; k <= n; ++k) {
    const double q = boost::math::pdf(dist, static_cast<double>(k));
    if (q > 0.0) law[k] = q;
  }
  return law;
}

template <typename Draw>
double binomial_gof(Count n, double p, std::uint64_t samples, Draw draw) {
  std::map<Count, std::uint64_t> obs;
  for (std::uint64_t i = 0; i < samples; ++i) ++obs[draw()];
  return oracle::chi_square(obs, binomial_law(n, p), samples).p_value;
}

// The dispatch cutoff sits at 30 expected successes; both sides must follow
// the exact law, including the folded p > 1/2 branch.
TEST(Binomial, GofAcrossRegimes) {
  struct Case {
    Count n;
    double p;
  };
  const Case cases[] = {{10, 0.3},   {1000, 0.0299}, {1000, 0.0301}, {60, 0.49},
                        {60, 0.51},  {1000, 0.97},   {200, 0.5},     {5000, 0.2},
                        {3, 0.9},    {100000, 0.001}};
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    RngStream r(seed++);
    const double pv = binomial_gof(c.n, c.p, 40000, [&] { return sample_binomial(c.n, c.p, r); });
    EXPECT_GT(pv, kAlpha) << "n=" << c.n << " p=" << c.p;
  }
}

TEST(Binomial, DirectAlgorithmsGof) {
  RngStream r1(7);
  EXPECT_GT(binomial_gof(400, 0.1, 40000, [&] { return detail::binomial_inversion(400, 0.1, r1); }),
            kAlpha);
  RngStream r2(8);
  EXPECT_GT(binomial_gof(400, 0.1, 40000, [&] { return detail::binomial_btrs(400, 0.1, r2); }),
            kAlpha);
  RngStream r3(9);
  EXPECT_GT(binomial_gof(50, 0.3, 40000, [&] { return detail::binomial_btrs(50, 0.3, r3); }),
            kAlpha);
}

TEST(Binomial, MomentsAtLargeN) {
  RngStream r(10);
  const Count n = 1'000'000;
  const double p = 0.3;
  const int samples = 20000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double v = static_cast<double>(sample_binomial(n, p, r));
    s += v;
    s2 += v * v;
  }
  const double mean = s / samples;
  const double var = s2 / samples - mean * mean;
  const double true_var = n * p * (1 - p);
  EXPECT_NEAR(mean, n * p, 4.0 * std::sqrt(true_var / samples));
  EXPECT_NEAR(var / true_var, 1.0, 0.05);
}

TEST(Multinomial, SumsAndSupport) {
  RngStream r(11);
  const ProbabilityVector theta({0.5, 0.0, 0.3, 0.2});
  for (int i = 0; i < 1000; ++i) {
    const auto x = sample_multinomial(25, theta, r);
    ASSERT_EQ(x.size(), 4u);
    EXPECT_EQ(x[0] + x[1] + x[2] + x[3], 25);
    EXPECT_EQ(x[1], 0);
  }
  EXPECT_THROW(sample_multinomial(-1, theta, r), Error);
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_THROW(sample_multinomial_weights(3, zeros, r), Error);
}

TEST(Multinomial, GofAgainstEnumeratedLawAtM3) {
  const std::vector<double> theta{0.45, 0.3, 0.15, 0.1};
  std::map<oracle::Counts, double> law;
  for (const auto& x : oracle::compositions(3, theta.size())) law[x] = oracle::multinomial_pmf(x, theta);
  RngStream r(12);
  const std::uint64_t samples = 60000;
  std::map<oracle::Counts, std::uint64_t> obs;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const auto x = sample_multinomial(3, ProbabilityVector(theta), r);
    ++obs[oracle::Counts(x.begin(), x.end())];
  }
  EXPECT_GT(oracle::chi_square(obs, law, samples).p_value, kAlpha);
}

TEST(Multinomial, UnnormalizedWeightsFollowNormalizedLaw) {
  const std::vector<double> w{3.0, 1.0, 1.0};
  const std::vector<double> theta{0.6, 0.2, 0.2};
  std::map<oracle::Counts, double> law;
  for (const auto& x : oracle::compositions(4, 3)) law[x] = oracle::multinomial_pmf(x, theta);
  RngStream r(13);
  const std::uint64_t samples = 40000;
  std::map<oracle::Counts, std::uint64_t> obs;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const auto x = sample_multinomial_weights(4, w, r);
    ++obs[oracle::Counts(x.begin(), x.end())];
  }
  EXPECT_GT(oracle::chi_square(obs, law, samples).p_value, kAlpha);
}

TEST(UniformNode, ExcludeSelf) {
  RngStream r(14);
  std::map<std::uint64_t, std::uint64_t> obs;
  std::map<std::uint64_t, double> law;
  for (std::uint64_t v = 0; v < 5; ++v) {
    if (v != 2) law[v] = 0.25;
  }
  for (int i = 0; i < 40000; ++i) ++obs[sample_uniform_node(5, true, 2, r)];
  EXPECT_EQ(obs.count(2), 0u);
  EXPECT_GT(oracle::chi_square(obs, law, 40000).p_value, kAlpha);
  EXPECT_EQ(sample_uniform_node(1, false, 0, r), 0u);
  try {
    sample_uniform_node(1, true, 0, r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoNeighbor);
  }
}

}  // namespace
