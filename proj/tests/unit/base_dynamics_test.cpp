#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace morsespec;
using namespace testing_support;

TEST(ThetaStep, QuarterRotationFromPointOne)
{
    const Driver drv = circle_rotation(0.25);
    const OmegaPoint w = theta_step(drv, circle_point(0.1), 2);
    EXPECT_NEAR(w.circle().value(), 0.6, 1e-15);
}

TEST(ThetaStep, ZeroStepIsIdentity)
{
    const Driver drv = product(golden_rotation(), bernoulli_shift(3, {0.2, 0.3, 0.5}, 4));
    const OmegaPoint w = sample_omega(drv, 9);
    EXPECT_EQ(theta_step(drv, w, 0), w);
}

TEST(ThetaStep, BernoulliRoundTripRestoresWindow)
{
    const Driver drv = bernoulli_shift(2, {0.5, 0.5}, 16);
    const OmegaPoint w = sample_omega(drv, 1234);
    const OmegaPoint back = theta_step(drv, theta_step(drv, w, 1), -1);
    EXPECT_EQ(back.bernoulli().window, w.bernoulli().window);
    EXPECT_EQ(back, w);
}

TEST(ThetaStep, CompositionLawExact)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> time(-10000, 10000);
    const Driver drv = product(golden_rotation(), bernoulli_shift(2, {0.3, 0.7}, 8));
    for (int k = 0; k < kCases; ++k) {
        const OmegaPoint w = sample_omega(drv, rng());
        const std::int64_t t = time(rng);
        const std::int64_t s = time(rng);
        const OmegaPoint a = theta_step(drv, theta_step(drv, w, s), t);
        const OmegaPoint b = theta_step(drv, w, t + s);
        ASSERT_EQ(a, b);
        ASSERT_EQ(a.bernoulli(1).window, b.bernoulli(1).window);
    }
}

TEST(ThetaStep, ShiftedSymbolsMatchTheSequence)
{
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::int64_t> time(-200, 200);
    std::uniform_int_distribution<std::int64_t> idx(-40, 40);
    const Driver drv = bernoulli_shift(3, {0.2, 0.5, 0.3}, 6);
    for (int k = 0; k < kCases; ++k) {
        const OmegaPoint w = sample_omega(drv, rng());
        const std::int64_t t = time(rng);
        const std::int64_t i = idx(rng);
        ASSERT_EQ(theta_step(drv, w, t).bernoulli().symbol(i), w.bernoulli().symbol(i + t));
    }
}

TEST(SampleOmega, DeterministicForSeed)
{
    EXPECT_EQ(sample_omega(golden_rotation(), 5), sample_omega(golden_rotation(), 5));
    EXPECT_FALSE(sample_omega(golden_rotation(), 5) == sample_omega(golden_rotation(), 6));
}

TEST(SampleOmega, BernoulliSymbolFrequency)
{
    const Driver drv = bernoulli_shift(2, {0.5, 0.5}, 0);
    int zeros = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        zeros += sample_omega(drv, static_cast<std::uint64_t>(i)).bernoulli().symbol(0) == 0;
    const double f = static_cast<double>(zeros) / n;
    EXPECT_GE(f, 0.495);
    EXPECT_LE(f, 0.505);
}

TEST(SampleOmega, ProductHasOneStatePerPart)
{
    const Driver drv = product(golden_rotation(), bernoulli_shift(2, {0.5, 0.5}, 3));
    const OmegaPoint w = sample_omega(drv, 3);
    ASSERT_EQ(w.parts.size(), 2U);
    EXPECT_TRUE(std::holds_alternative<CircleState>(w.parts[0]));
    EXPECT_TRUE(std::holds_alternative<BernoulliState>(w.parts[1]));
    EXPECT_EQ(drv.kind(), "product");
}

TEST(Driver, RejectsBadProbabilities)
{
    EXPECT_THROW(bernoulli_shift(2, {0.5, 0.6}), InvalidParams);
    EXPECT_THROW(bernoulli_shift(2, {0.5}), InvalidParams);
    EXPECT_THROW(bernoulli_shift(2, {1.5, -0.5}), InvalidParams);
    EXPECT_THROW(circle_rotation(1.0), InvalidParams);
}

namespace {

double ks_statistic(std::vector<double> xs)
{
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        d = std::max({d, (static_cast<double>(i) + 1) / n - xs[i], xs[i] - static_cast<double>(i) / n});
    return d;
}

} // namespace

TEST(CircleOrbit, EquidistributionImprovesWithLength)
{
    const Driver drv = golden_rotation();
    const OmegaPoint w0 = circle_point(0.123);
    double prev = 1.0;
    for (int n : {100, 1000, 10000}) {
        std::vector<double> xs;
        OmegaPoint w = w0;
        for (int i = 0; i < n; ++i) {
            xs.push_back(w.circle().value());
            w = theta_step(drv, w, 1);
        }
        const double ks = ks_statistic(xs);
        EXPECT_LT(ks, prev);
        prev = ks;
    }
}

TEST(CircleState, ValueStaysBelowOne)
{
    EXPECT_LT(CircleState{~0ULL}.value(), 1.0);
    EXPECT_EQ(CircleState::from_value(1.0 - 1e-18).phase, 0ULL);
}
